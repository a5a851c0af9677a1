# src/manager.py
import importlib
import inspect
import os
from typing import Any, Dict, Optional, Type

from src.base_component import BaseComponent
from src.config import Settings
from src.logger import log_message

COMPONENTS_PACKAGE = "src.components"
COMPONENTS_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "components")


class ComponentManager:
    """
    Manages the discovery, lifecycle, and access of command components.
    """

    def __init__(
        self,
        components_dir: str = COMPONENTS_DIR,
        package: str = COMPONENTS_PACKAGE,
        settings: Optional[Settings] = None,
    ):
        self.components_dir = components_dir
        self.package = package
        self.settings = settings or Settings()
        self._loaded_components: Dict[str, BaseComponent] = {}
        self._available_component_classes: Dict[str, Type[BaseComponent]] = {}

    def refresh_components(self):
        """
        Unloads everything, re-scans the components directory and imports every
        module in it, collecting BaseComponent subclasses by command name.
        """
        self.unload_all_components()
        self._available_component_classes = {}
        self._auto_import_components()

    def _auto_import_components(self):
        if not os.path.isdir(self.components_dir):
            log_message("WARNING", f"Components directory '{self.components_dir}' not found. No commands available.")
            return

        for filename in sorted(os.listdir(self.components_dir)):
            if filename.endswith(".py") and filename != "__init__.py":
                module_name = f"{self.package}.{filename[:-3]}"
                # import errors propagate: a broken command module is a bug, not a runtime condition
                module = importlib.import_module(module_name)
                self._discover_component_classes(module)

    def _discover_component_classes(self, module):
        """
        Discovers subclasses of BaseComponent defined in an imported module.
        """
        for _, obj in inspect.getmembers(module, inspect.isclass):
            if (
                issubclass(obj, BaseComponent)
                and obj is not BaseComponent
                and obj.__module__ == module.__name__
                and not inspect.isabstract(obj)
            ):
                command = obj.command or obj.__name__.lower()
                if command in self._available_component_classes:
                    log_message(
                        "WARNING",
                        f"Duplicate command '{command}' in {module.__name__}. Skipping.",
                    )
                else:
                    self._available_component_classes[command] = obj

    def load_component(self, command: str) -> Optional[BaseComponent]:
        """
        Instantiates a command component and calls its `onload` method.
        """
        if command in self._loaded_components:
            return self._loaded_components[command]

        component_class = self._available_component_classes.get(command)
        if not component_class:
            log_message("ERROR", f"Command '{command}' not found.")
            return None

        component = component_class(component_class.__name__, self.settings)
        component.onload()
        self._loaded_components[command] = component
        return component

    def load_all_components(self):
        for command in self._available_component_classes:
            if command not in self._loaded_components:
                self.load_component(command)

    def use_component(self, command: str, *args: Any, **kwargs: Any) -> int:
        """
        Calls the `use` method of a loaded command with the given arguments.
        """
        component = self._loaded_components.get(command)
        if component is None:
            log_message("ERROR", f"Command '{command}' not found or not loaded.")
            return 2
        log_message("COMPONENT", f"Running '{command}'...")
        return component.use(*args, **kwargs)

    def unload_component(self, command: str):
        """
        Unloads a command component, calling its `destroy` method.
        """
        component = self._loaded_components.pop(command, None)
        if component:
            component.destroy()

    def unload_all_components(self):
        for command in list(self._loaded_components.keys()):
            self.unload_component(command)

    @property
    def loaded_components(self) -> Dict[str, BaseComponent]:
        return self._loaded_components

    @property
    def available_commands(self):
        return list(self._available_component_classes)
