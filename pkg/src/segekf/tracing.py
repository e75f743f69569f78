"""Structured logs and spans on top of ``logfire-api``.

Without the ``logfire`` extra every call is a no-op. Trace propagation into pool workers needs the extra as well, so
``TraceContext`` degrades to an empty context when it is missing.
"""

import contextlib
import enum
import functools
import importlib
import importlib.util
import inspect
from collections.abc import Callable, Coroutine, Iterator
from enum import Enum
from pathlib import Path
from types import ModuleType
from typing import Any, ClassVar, Final, Literal, Self, final

import logfire_api
from logfire_api import Logfire

__all__: Final[tuple[str, ...]] = ("TraceContext", "TraceLevel", "Tracer")

logfire_api.add_non_user_code_prefix(__file__)

# ``logfire-api`` only ships typing stubs for the propagation helpers.
_PROPAGATE: Final[ModuleType | None] = (
    importlib.import_module("logfire.propagate") if importlib.util.find_spec("logfire") is not None else None
)


@final
class TraceLevel(int, Enum):
    TRACE = enum.auto()
    DEBUG = enum.auto()
    INFO = enum.auto()
    NOTICE = enum.auto()
    WARNING = enum.auto()
    ERROR = enum.auto()
    FATAL = enum.auto()

    @property
    def logfire_name(self: Self, /) -> str:
        return self.name.lower()


@final
class TraceContext:
    """W3C ``traceparent`` of the batch span, packed to 25 bytes for the trip into a pool worker."""

    __slots__: ClassVar[tuple[str, ...]] = ("__parent",)

    def __init__(self: Self, /, *, parent: str | None = None) -> None:
        self.__parent: Final[str | None] = parent

    @classmethod
    def get_current(cls: type[Self], /) -> Self:
        if _PROPAGATE is None:
            return cls()

        return cls(parent=_PROPAGATE.get_context().get("traceparent"))

    @classmethod
    def from_bytes(cls: type[Self], /, packed: bytes) -> Self:
        if not packed:
            return cls()

        digits: Final[str] = packed.hex()
        return cls(parent="-".join((digits[:2], digits[2:34], digits[34:50], digits[50:])))

    @property
    def is_empty(self: Self, /) -> bool:
        return self.__parent is None

    def to_bytes(self: Self, /) -> bytes:
        if self.__parent is None:
            return b""

        return bytes.fromhex(self.__parent.replace("-", ""))

    def to_json_dict(self: Self, /) -> dict[str, str]:
        return {} if self.__parent is None else {"traceparent": self.__parent}

    @contextlib.contextmanager
    def attach(self: Self, /, tracer: "Tracer") -> Iterator[None]:
        """Run the block under this parent; a failure is logged before the parent is detached again."""
        attached: Final[contextlib.AbstractContextManager[Any]] = (
            contextlib.nullcontext()
            if _PROPAGATE is None or self.is_empty
            else _PROPAGATE.attach_context(self.to_json_dict())
        )
        with attached:
            try:
                yield

            except Exception as exception:
                tracer.error("worker failed", exception_=exception)
                raise


@final
class Tracer:
    """One per module, ``Tracer(__name__)``; attributes are passed as keywords, never formatted into the message."""

    __slots__: ClassVar[tuple[str, ...]] = ("__logfire",)

    TRACE: ClassVar[Literal[TraceLevel.TRACE]] = TraceLevel.TRACE
    DEBUG: ClassVar[Literal[TraceLevel.DEBUG]] = TraceLevel.DEBUG
    INFO: ClassVar[Literal[TraceLevel.INFO]] = TraceLevel.INFO
    NOTICE: ClassVar[Literal[TraceLevel.NOTICE]] = TraceLevel.NOTICE
    WARNING: ClassVar[Literal[TraceLevel.WARNING]] = TraceLevel.WARNING
    ERROR: ClassVar[Literal[TraceLevel.ERROR]] = TraceLevel.ERROR
    FATAL: ClassVar[Literal[TraceLevel.FATAL]] = TraceLevel.FATAL

    def __init__(self: Self, scope: str, /, *, logfire: Logfire = logfire_api.DEFAULT_LOGFIRE_INSTANCE) -> None:
        self.__logfire: Final[Logfire] = logfire.with_settings(tags=("segekf",), custom_scope_suffix=scope)

    def log(
        self: Self, level: TraceLevel, message: str, /, *, exception_: BaseException | None = None, **attributes: Any
    ) -> None:
        self.__logfire.log(level.logfire_name, message, attributes, exc_info=exception_)

    def trace(self: Self, message: str, /, **attributes: Any) -> None:
        self.log(self.TRACE, message, **attributes)

    def debug(self: Self, message: str, /, *, exception_: BaseException | None = None, **attributes: Any) -> None:
        self.log(self.DEBUG, message, exception_=exception_, **attributes)

    def info(self: Self, message: str, /, **attributes: Any) -> None:
        self.log(self.INFO, message, **attributes)

    def warning(self: Self, message: str, /, **attributes: Any) -> None:
        self.log(self.WARNING, message, **attributes)

    def error(self: Self, message: str, /, *, exception_: BaseException | None = None, **attributes: Any) -> None:
        self.log(self.ERROR, message, exception_=exception_, **attributes)

    def with_span_sync[**P, R](
        self: Self, level: TraceLevel, name: str, /, **attributes: Any
    ) -> Callable[[Callable[P, R]], Callable[P, R]]:
        def _decorator(function: Callable[P, R]) -> Callable[P, R]:
            span_attributes: Final[dict[str, Any]] = attributes | _code_attributes(function)

            @functools.wraps(function)
            def _wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
                with self.__span(level, name, span_attributes):
                    return function(*args, **kwargs)

            return _wrapper

        return _decorator

    def with_span_async[**P, R](
        self: Self, level: TraceLevel, name: str, /, **attributes: Any
    ) -> Callable[[Callable[P, Coroutine[None, None, R]]], Callable[P, Coroutine[None, None, R]]]:
        def _decorator(function: Callable[P, Coroutine[None, None, R]]) -> Callable[P, Coroutine[None, None, R]]:
            span_attributes: Final[dict[str, Any]] = attributes | _code_attributes(function)

            @functools.wraps(function)
            async def _wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
                with self.__span(level, name, span_attributes):
                    return await function(*args, **kwargs)

            return _wrapper

        return _decorator

    def __span(
        self: Self, level: TraceLevel, name: str, attributes: dict[str, Any]
    ) -> contextlib.AbstractContextManager[Any]:
        return self.__logfire.span(name, _span_name=name, _level=level.logfire_name, **attributes)


def _code_attributes(function: Callable[..., Any]) -> dict[str, Any]:
    path: Final[Path] = Path(inspect.getfile(function))
    # Installed packages live outside the working directory.
    relative: Final[Path] = path.relative_to(Path.cwd()) if path.is_relative_to(Path.cwd()) else path
    return {
        "code.filepath": relative.as_posix(),
        "code.function": function.__qualname__,
        "code.lineno": function.__code__.co_firstlineno if hasattr(function, "__code__") else None,
    }
