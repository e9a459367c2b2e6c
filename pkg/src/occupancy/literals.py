"""Text literals naming frequency models, e.g. ``geometric:q=0.5``."""
from .errors import ParameterDomainError
from .frequency_models import (BlockSpec, load_explicit, make_block, make_explicit,
                               make_geometric, make_power_law, make_rapid,
                               make_slow_variation, realize_stick_breaking)
from .regvar import SlowVariation


def _split(literal):
    if ":" not in literal:
        family, rest = literal, ""
    else:
        family, rest = literal.split(":", 1)
    args = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise ParameterDomainError(f"malformed model argument {item!r} in {literal!r}")
        key, value = item.split("=", 1)
        args[key.strip()] = value.strip()
    return family.strip().lower(), args


def _num(args, key, default=None, cast=float):
    if key not in args:
        if default is None:
            raise ParameterDomainError(f"model literal needs {key}=")
        return default
    try:
        return cast(args.pop(key))
    except ValueError as exc:
        raise ParameterDomainError(f"bad value for {key}: {exc}") from None


def parse_model(literal):
    """Build a frequency model from its literal."""
    family, args = _split(literal)
    if family == "geometric":
        model = make_geometric(_num(args, "q"))
    elif family in ("powerlaw", "power-law"):
        alpha = _num(args, "alpha")
        beta = _num(args, "beta", 0.0)
        C = _num(args, "C", 1.0)
        model = make_power_law(alpha, SlowVariation(C, beta) if beta else None)
    elif family in ("slowvar", "slow-variation"):
        model = make_slow_variation(SlowVariation(_num(args, "C", 1.0), _num(args, "beta")))
    elif family == "rapid":
        model = make_rapid(SlowVariation(_num(args, "C", 1.0), _num(args, "beta", -2.0)))
    elif family == "block":
        if "file" in args:
            model = make_block(BlockSpec.from_file(args.pop("file")))
        else:
            preset = args.pop("preset", None)
            if preset is None:
                raise ParameterDomainError("block literal needs preset= or file=")
            levels = _num(args, "levels", 0, int) or None
            model = make_block(example=preset, levels=levels, q=_num(args, "q", 0.25))
    elif family == "gem":
        model = realize_stick_breaking(_num(args, "theta", 0.0), _num(args, "alpha", 0.0),
                                       _num(args, "seed", 0, int),
                                       _num(args, "depth", 4096, int))
    elif family == "explicit":
        if "file" in args:
            model = load_explicit(args.pop("file"))
        elif "p" in args:
            model = make_explicit([float(v) for v in args.pop("p").split("|")])
        else:
            raise ParameterDomainError("explicit literal needs file= or p=")
    else:
        raise ParameterDomainError(f"unknown model family {family!r}")
    if args:
        raise ParameterDomainError(f"unused model arguments {sorted(args)} in {literal!r}")
    return model
