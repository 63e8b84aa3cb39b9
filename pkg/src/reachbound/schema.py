"""Shipped JSON schemas for reports and experiment configs."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

NAMES = ("common", "bound_report", "estimate_report", "tail_curve", "worstcase", "error", "mc_config")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("reachbound").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def _registry() -> Registry:
    return Registry().with_resources(
        (f"{n}.schema.json", Resource.from_contents(load_schema(n))) for n in NAMES
    )


def validator(name: str) -> Draft202012Validator:
    return Draft202012Validator(load_schema(name), registry=_registry())


def validate(name: str, instance) -> None:
    """Raise jsonschema.ValidationError when ``instance`` does not match."""
    validator(name).validate(instance)
