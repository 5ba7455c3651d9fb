import io
import logging
import pathlib
from abc import ABC, abstractmethod
from collections.abc import Iterator

from errors import StorageError, StorageFileNotFoundError, StoragePermissionError

logger = logging.getLogger(__name__)


# --- Base Strategy Interface ---
class StorageStrategy(ABC):
    @abstractmethod
    def save(self, buffer: io.StringIO | io.BytesIO, filename: str) -> pathlib.Path:
        """Saves the content of an in-memory buffer under filename."""
        pass

    @abstractmethod
    def read(self, filename: str, binary: bool = False) -> io.StringIO | io.BytesIO:
        """Reads a stored artifact into an in-memory buffer."""
        pass

    @abstractmethod
    def exists(self, filename: str) -> bool:
        pass

    @abstractmethod
    def iter_dirs(self) -> Iterator[str]:
        """Yields the names of the sub-directories (one per track), sorted."""
        pass


# --- Concrete Strategy for Local Storage ---
class LocalStorageStrategy(StorageStrategy):
    """Keeps artifacts as files below a base directory."""
    def __init__(self, base_path: pathlib.Path):
        self.base_path = pathlib.Path(base_path)

    def save(self, buffer: io.StringIO | io.BytesIO, filename: str) -> pathlib.Path:
        full_path = self.base_path / filename
        try:
            full_path.parent.mkdir(parents=True, exist_ok=True)
            # getvalue() はカーソル位置に関係なくバッファ全体を返す
            content = buffer.getvalue()
            if isinstance(content, bytes):
                full_path.write_bytes(content)
            else:
                full_path.write_text(content, encoding='utf-8', newline='')
            logger.debug(f"Saved '{full_path}' ({len(content)} {'bytes' if isinstance(content, bytes) else 'chars'}).")
            return full_path

        except PermissionError as e:
            raise StoragePermissionError(f"Permission denied for local file: {full_path}") from e
        except IsADirectoryError as e:
            raise StorageError(f"Cannot save, path is a directory: {full_path}") from e
        except OSError as e:
            raise StorageError(f"An OS error occurred while saving file: {full_path} ({e})") from e

    def read(self, filename: str, binary: bool = False) -> io.StringIO | io.BytesIO:
        full_path = self.base_path / filename
        logger.debug(f"LocalStorage: Reading '{full_path}'.")
        try:
            if binary:
                return io.BytesIO(full_path.read_bytes())
            return io.StringIO(full_path.read_text(encoding='utf-8'))
        except FileNotFoundError as e:
            raise StorageFileNotFoundError(f"Local file not found: {full_path}") from e
        except PermissionError as e:
            raise StoragePermissionError(f"Permission denied for local file: {full_path}") from e
        except IsADirectoryError as e:
            raise StorageError(f"Path is a directory, not a file: {full_path}") from e
        except UnicodeDecodeError as e:
            raise StorageError(f"Failed to decode file with UTF-8: {full_path}") from e
        except OSError as e:
            raise StorageError(f"An OS error occurred while reading file: {full_path}") from e

    def exists(self, filename: str) -> bool:
        full_path = self.base_path / filename
        try:
            return full_path.exists()
        except OSError as e:
            logger.warning(f"An OS error occurred while checking existence of '{full_path}': {e}")
            return False

    def iter_dirs(self) -> Iterator[str]:
        if not self.base_path.is_dir():
            raise StorageFileNotFoundError(f"Directory not found: {self.base_path}")
        for child in sorted(self.base_path.iterdir()):
            if child.is_dir():
                yield child.name


# --- Factory Function ---
def get_storage_strategy(base_dir: str | pathlib.Path) -> StorageStrategy:
    """
    Selects the storage strategy for a base directory. Relative paths resolve
    against the current working directory.
    """
    return LocalStorageStrategy(base_path=pathlib.Path(base_dir))
