# src/base_component.py
import abc
import inspect
from pathlib import Path
from typing import Optional

from src.config import Settings


class BaseComponent(abc.ABC):
    """
    Abstract base class for pipeline commands.
    Each concrete component is one CLI subcommand; its `use` signature is the
    command-line surface (see src/cli.py).
    """

    # subcommand name, e.g. "extract"
    command: str = ""

    def __init__(self, name: str, settings: Optional[Settings] = None):
        self._name = name
        self.settings = settings or Settings()

    @property
    def name(self) -> str:
        return self._name

    @property
    def summary(self) -> str:
        """First line of the class docstring, used as the subcommand help."""
        doc = inspect.getdoc(self) or ""
        return doc.splitlines()[0] if doc else self.name

    def data_path(self, path: Optional[str], default_name: str, data_dir: Optional[str] = None) -> Path:
        """An explicit path, or `default_name` under the data directory."""
        if path:
            return Path(path)
        return Path(data_dir or self.settings.data_dir) / default_name

    def onload(self):
        """
        Called when the component is loaded by the manager, after `settings`
        is resolved. The built-in commands need no setup.
        """

    @abc.abstractmethod
    def use(self, *args, **kwargs) -> int:
        """
        Runs the command and returns a process exit status (0 on success).
        """

    def destroy(self):
        """
        Called when the component is unloaded by the manager.
        """

    def __repr__(self) -> str:
        return f"<Component: {self.command or self.name}>"
