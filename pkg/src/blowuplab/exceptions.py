class Error(Exception):
    """Base class for exceptions in this package
    このパッケージの例外の基本クラス
    """
    pass

class InterfaceError(Error):
    """Exception raised for bad input at the package boundary (config files, CLI flags, CSV schema)
    パッケージ境界での不正な入力（設定ファイル、CLIフラグ、CSVスキーマ）に関する例外
    """
    pass

class SimulationError(Error):
    """Exception raised for errors inside the numerical laboratory
    数値実験室の内部で発生したエラーの例外
    """
    pass

class DataError(SimulationError):
    """Exception raised for malformed field data (size mismatch, NaN, negative density)
    不正な場データ（サイズ不一致、NaN、負の密度）に関する例外
    """
    pass

class OperationalError(SimulationError):
    """Exception raised for runtime failures such as I/O errors or an empty density support
    I/Oエラーや密度の台が空である場合など実行時の失敗に関する例外
    """
    pass

class ProgrammingError(SimulationError):
    """
    Exception raised when an operation is called outside its preconditions.
    操作の前提条件が満たされない場合に発生する例外
    """
    pass

class NotSupportedError(SimulationError):
    """
    Exception raised for requests that are well formed but not supported.
    形式は正しいがサポートされていない要求の際に発生する例外
    """
    pass
