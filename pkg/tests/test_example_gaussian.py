import importlib.util
import os

import pytest

EXAMPLE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "example", "example_gaussian.py")


# Fixture: example/example_gaussian.py をモジュールとして読み込む
@pytest.fixture
def example():
    spec = importlib.util.spec_from_file_location("example_gaussian", EXAMPLE)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_example_gaussian(example, capsys):
    """The example runs end to end and every certificate it lists passes
    サンプルが最後まで実行され、表示される全ての証明書が成立することのテスト
    """
    example.main()
    out = capsys.readouterr().out
    assert "termination: reached-t_end" in out
    for name in ("gradient-lower-bound", "energy-monotonicity", "G-sandwich", "decay-envelope"):
        assert name in out
    assert out.splitlines()[-1] == "all certificates passed"
