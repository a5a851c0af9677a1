# src/cli.py
import argparse
import inspect
import re
import typing
from typing import Any, Dict, Literal, Optional, Sequence

from src.base_component import BaseComponent
from src.config import Settings, load_settings
from src.errors import Sig2dError
from src.logger import log_message, set_color
from src.manager import ComponentManager

_ARG_LINE = re.compile(r"^\s{4,}(\w+)(?:\s*\([^)]*\))?:\s*(.+)$")


def _param_docs(method) -> Dict[str, str]:
    """Maps parameter names to their one-line description in the Args: section."""
    doc = inspect.getdoc(method) or ""
    docs = {}
    in_args = False
    for line in doc.splitlines():
        if line.strip() == "Args:":
            in_args = True
            continue
        if in_args and line.strip().endswith(":") and not line.startswith(" "):
            break
        match = _ARG_LINE.match(line) if in_args else None
        if match:
            docs[match.group(1)] = match.group(2)
    return docs


def _unwrap_optional(annotation: Any) -> Any:
    if typing.get_origin(annotation) is typing.Union:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return annotation


def _add_parameter(parser: argparse.ArgumentParser, name: str, param: inspect.Parameter, annotation: Any, help_text: str):
    """
    Converts one `use` parameter to an argparse argument: parameters without a
    default become positionals, the rest `--flags`.
    """
    annotation = _unwrap_optional(annotation)
    required = param.default is inspect.Parameter.empty
    kwargs: Dict[str, Any] = {"help": help_text}
    origin = typing.get_origin(annotation)

    if annotation is bool:
        kwargs.update(action=argparse.BooleanOptionalAction, default=bool(param.default) if not required else False)
    elif origin is Literal:
        kwargs.update(choices=list(typing.get_args(annotation)), type=str)
    elif origin is list:
        (item_type,) = typing.get_args(annotation) or (str,)
        kwargs.update(nargs="+", type=item_type)
    elif annotation in (int, float, str):
        kwargs.update(type=annotation)
    else:
        kwargs.update(type=str)

    if required:
        kwargs.pop("default", None)
        parser.add_argument(name, **kwargs)
    else:
        kwargs.setdefault("default", param.default)
        parser.add_argument("--" + name.replace("_", "-"), dest=name, **kwargs)


def _component_to_subparser(subparsers, command: str, component: BaseComponent):
    """
    Builds the sub-parser of a command from its `use` signature and docstring.
    """
    method = component.use
    hints = typing.get_type_hints(method)
    docs = _param_docs(method)
    parser = subparsers.add_parser(
        command,
        help=component.summary,
        description=inspect.getdoc(component),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    for name, param in inspect.signature(method).parameters.items():
        if name == "self" or param.kind in (param.VAR_POSITIONAL, param.VAR_KEYWORD):
            continue
        _add_parameter(parser, name, param, hints.get(name, str), docs.get(name, ""))


def build_parser(manager: ComponentManager) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sig2d",
        description="2-d signature texture features: synthesize, extract, train, evaluate, benchmark, sweep.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, component in manager.loaded_components.items():
        _component_to_subparser(subparsers, command, component)
    return parser


def main(argv: Optional[Sequence[str]] = None, settings: Optional[Settings] = None) -> int:
    """
    Loads every command component, parses the command line and runs one command.

    Returns:
        The command's exit status; 2 when it raised a pipeline error.
    """
    try:
        settings = settings or load_settings()
    except Sig2dError as e:
        log_message("ERROR", str(e))
        return 2
    set_color(settings.color)
    manager = ComponentManager(settings=settings)
    manager.refresh_components()
    manager.load_all_components()
    try:
        args = vars(build_parser(manager).parse_args(argv))
        command = args.pop("command")
        return manager.use_component(command, **args)
    except Sig2dError as e:
        log_message("ERROR", str(e))
        return 2
    finally:
        manager.unload_all_components()
