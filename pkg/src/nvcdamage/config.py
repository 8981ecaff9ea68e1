"""Key-value scenario files with explicit units.

Format::

    [gurson]
    sigma0 = 420 MPa     # comment
    fc = 0.15

Dimensional keys must carry a unit suffix from the key's unit family; values
are converted to SI while parsing. Unknown sections, unknown keys, duplicate
keys, wrong units and out-of-range values are reported with the line number.
"""
from __future__ import annotations

from dataclasses import replace

from .driver import ScenarioConfig


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


UNITS: dict[str, dict[str, float]] = {
    "stress": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "A": 1e-10},
    "concentration": {"mol/m3": 1.0, "mol/cm3": 1e6, "mol/mm3": 1e9, "mol/L": 1e3},
    "molar_volume": {"m3/mol": 1.0, "cm3/mol": 1e-6, "mm3/mol": 1e-9},
    "molar_energy": {"J/mol": 1.0, "kJ/mol": 1e3},
    "diffusivity": {"m2/s": 1.0, "cm2/s": 1e-4, "mm2/s": 1e-6},
    "temperature": {"K": 1.0},
    "time": {"s": 1.0, "min": 60.0, "h": 3600.0},
    "rate": {"1/s": 1.0},
    "areal_density": {"1/m2": 1.0, "1/cm2": 1e4, "1/mm2": 1e6},
}

# section -> key -> (dataclass field, kind); kind is a unit family or a type
_SCHEMA: dict[str, dict[str, str]] = {
    "geometry": {"radius": "length", "gage": "length"},
    "mesh": {"nr": "int", "nz": "int", "delta_R_fraction": "float", "grading": "float"},
    "elastic": {"E": "stress", "nu": "float"},
    "gurson": {"q1": "float", "q2": "float", "q3": "float", "f0": "float", "fN": "float",
               "epsN": "float", "SN": "float", "sigma0": "stress", "eps0": "float",
               "n_hard": "float", "Cc": "concentration", "B": "molar_volume",
               "fc": "float", "fF": "float"},
    "hydrogen": {"C_total": "concentration", "measure": "str", "softening": "bool",
                 "h_nucleation": "bool"},
    "traps": {"W_B": "molar_energy", "alpha": "float", "beta": "float",
              "V_M": "molar_volume", "V_H": "molar_volume", "D": "diffusivity",
              "T": "temperature", "d_lattice": "length", "rho0": "areal_density",
              "gamma": "areal_density", "eps_p_sat": "float"},
    "run": {"strain_rate": "rate", "dt": "time", "max_eng_strain": "float",
            "output_every": "int", "failure_rule": "str"},
}

_SI_UNIT = {family: next(u for u, s in table.items() if s == 1.0)
            for family, table in UNITS.items()}


def _convert(raw: str, kind: str, line: int):
    if kind == "str":
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}", line)
    parts = raw.split()
    if kind in ("int", "float"):
        if len(parts) != 1:
            raise ConfigError(f"dimensionless value takes no unit: {raw!r}", line)
        try:
            return int(parts[0]) if kind == "int" else float(parts[0])
        except ValueError:
            raise ConfigError(f"expected a number, got {raw!r}", line) from None
    if len(parts) != 2:
        raise ConfigError(
            f"value needs a unit from {sorted(UNITS[kind])}, got {raw!r}", line)
    try:
        number = float(parts[0])
    except ValueError:
        raise ConfigError(f"expected a number, got {parts[0]!r}", line) from None
    scale = UNITS[kind].get(parts[1])
    if scale is None:
        raise ConfigError(
            f"unit {parts[1]!r} does not fit {kind}; use one of {sorted(UNITS[kind])}", line)
    return number * scale


def parse_config(text: str) -> ScenarioConfig:
    """Parse a scenario file into a validated, SI-unit configuration."""
    values: dict[str, dict[str, object]] = {s: {} for s in _SCHEMA}
    lines: dict[str, dict[str, int]] = {s: {} for s in _SCHEMA}
    section_line: dict[str, int] = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section in section_line:
                raise ConfigError(f"section [{section}] repeated", lineno)
            section_line[section] = lineno
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not raw:
            raise ConfigError(f"missing value for {key!r}", lineno)
        values[section][key] = _convert(raw, _SCHEMA[section][key], lineno)
        lines[section][key] = lineno

    # omitted keys fall back to the calibrated scenario defaults
    defaults = ScenarioConfig()
    values["gurson"].setdefault("q3", None)   # derived from q1 when omitted
    parts = {}
    for name in _SCHEMA:
        try:
            parts[name] = replace(getattr(defaults, name), **values[name])
        except (ValueError, TypeError) as exc:
            where = min(lines[name].values(), default=section_line.get(name))
            raise ConfigError(f"[{name}] {exc}", where) from None
    return ScenarioConfig(**parts)


def _format(value, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind in ("str", "int"):
        return str(value)
    if kind == "float":
        return repr(float(value))
    return f"{float(value)!r} {_SI_UNIT[kind]}"


def serialize_config(config: ScenarioConfig) -> str:
    """Text form that :func:`parse_config` maps back to an equal config."""
    out = []
    for name, keys in _SCHEMA.items():
        obj = getattr(config, name)
        out.append(f"[{name}]")
        for key, kind in keys.items():
            out.append(f"{key} = {_format(getattr(obj, key), kind)}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

