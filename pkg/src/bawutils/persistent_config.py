import inspect
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Type, TypeVar, Union, final

import yaml

from bawutils.errors import AttributeNotFoundException, ConfigException, UnknownConfigKeyException

_LOGGER = logging.getLogger(__name__)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a YAML run configuration; an empty file is an empty configuration"""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            document = yaml.safe_load(stream)
    except OSError as exc:
        raise ConfigException(f"Unable to read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigException(f"Config file {path} is not valid YAML: {exc}") from exc
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigException(f"Config file {path} must contain a mapping of sections, got {type(document).__name__}")
    _LOGGER.info(f"Loaded config sections {', '.join(sorted(document)) or 'none'} from {path}")
    return document


@dataclass
class PersistedAttribute:
    """Links a config attribute to its key in the config file and, optionally, to a command-line option"""

    attribute: str
    cli_option: Optional[str]
    file_key: str
    converter: Callable[[Any], Any] = str


T = TypeVar("T", bound="PersistedConfig")  # pylint:disable=invalid-name


class PersistedConfig(ABC):
    """
    Mixin class that provides common functionality for loading config from command-line options and a sectioned
    config file, with the precedence command-line option > config file > constructor default
    """

    @classmethod
    @abstractmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return []

    @classmethod
    @abstractmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return {}

    def __eq__(self, other: Any) -> bool:
        return type(other) is type(self) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        names = [attr.attribute for attr in self._get_persisted_attributes()] + list(self._get_subconfigs())
        args = ", ".join(f"{name}={getattr(self, name)!r}" for name in names)
        return f"{type(self).__name__}({args})"

    @classmethod
    @final
    def _check_keys(cls, values: Mapping[str, Any]) -> None:
        valid = [attr.file_key for attr in cls._get_persisted_attributes()] + list(cls._get_subconfigs())
        for key in values:
            if key not in valid:
                raise UnknownConfigKeyException(
                    f"Unknown key {key!r} in {cls.__name__}. Valid keys: {', '.join(valid)}"
                )

    @classmethod
    @final
    def _convert(cls, persisted_attr: PersistedAttribute, value: Any, source: str) -> Any:
        try:
            return persisted_attr.converter(value)
        except (TypeError, ValueError) as exc:
            raise ConfigException(f"Invalid {source} value {value!r} for {persisted_attr.file_key}: {exc}") from exc

    @classmethod
    @final
    def _get_init_args_from_cli(
        cls, cli_args: Mapping[str, Any], persisted_attrs: List[PersistedAttribute]
    ) -> Dict[str, Any]:
        """
        Values given on the command line for the attributes that declare a `cli_option`. Options that were not given
        (None) are omitted from the resulting Dict
        """
        res: Dict[str, Any] = {}
        for persisted_attr in persisted_attrs:
            if persisted_attr.cli_option:
                val = cli_args.get(persisted_attr.cli_option)
                if val is not None:
                    res[persisted_attr.attribute] = cls._convert(persisted_attr, val, "command-line")
        return res

    @classmethod
    @final
    def _get_init_args_from_file(
        cls, values: Mapping[str, Any], persisted_attrs: List[PersistedAttribute]
    ) -> Dict[str, Any]:
        res: Dict[str, Any] = {}
        for persisted_attr in persisted_attrs:
            if persisted_attr.file_key in values:
                res[persisted_attr.attribute] = cls._convert(persisted_attr, values[persisted_attr.file_key], "file")
        return res

    @classmethod
    @final
    def _get_init_args(cls, values: Mapping[str, Any], cli_args: Mapping[str, Any]) -> Dict[str, Any]:
        if not isinstance(values, Mapping):
            raise ConfigException(f"{cls.__name__} must be a mapping, got {type(values).__name__}")
        cls._check_keys(values)
        persisted_attrs = cls._get_persisted_attributes()

        kwargs = cls._get_init_args_from_file(values, persisted_attrs)
        kwargs.update(cls._get_init_args_from_cli(cli_args, persisted_attrs))

        parameters = inspect.signature(cls.__init__).parameters
        for persisted_attr in persisted_attrs:
            parameter = parameters.get(persisted_attr.attribute)
            if persisted_attr.attribute not in kwargs and parameter and parameter.default is inspect.Parameter.empty:
                msg = f"{cls.__name__} needs a value for {persisted_attr.file_key!r}. It was not provided"
                _LOGGER.info(msg)
                raise AttributeNotFoundException(msg)

        # Deal with nested configs
        for attribute_name, subconfig_class in cls._get_subconfigs().items():
            kwargs[attribute_name] = subconfig_class.load(values.get(attribute_name) or {}, cli_args)

        return kwargs

    @classmethod
    def load(
        cls: Type[T], values: Optional[Mapping[str, Any]] = None, cli_args: Optional[Mapping[str, Any]] = None
    ) -> T:
        kwargs = cls._get_init_args(values or {}, cli_args or {})
        return cls(**kwargs)

    @classmethod
    @final
    def get_persisted_attribute(cls, attribute_name: str) -> PersistedAttribute:
        try:
            return next(a for a in cls._get_persisted_attributes() if a.attribute == attribute_name)
        except StopIteration as exc:
            raise KeyError(f"Didn't find a persisted attribute named {attribute_name!r}") from exc

    def to_dict(self) -> Dict[str, Any]:
        """Effective configuration in config-file form, sub-configs nested under their section names"""
        res: Dict[str, Any] = {}
        for mapping in self._get_persisted_attributes():
            val = getattr(self, mapping.attribute)
            res[mapping.file_key] = list(val) if isinstance(val, tuple) else val

        for attribute_name in self._get_subconfigs():
            res[attribute_name] = getattr(self, attribute_name).to_dict()
        return res
