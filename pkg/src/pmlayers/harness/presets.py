"""Built-in experiment presets (config text) for the documented runs."""

from __future__ import annotations

from ..errors import ConfigError
from .config import parse

_SIX_LAYERS = "-3.4, -2, 0, 0.9, 2.2, 3.2"
_TWO_BLOCKS = """init.kind = constant-perturbation
init.breaks = -3, 1
init.signs = +-+
init.amplitude = 0.01
"""

PRESET_TEXT: dict[str, str] = {
    "exp1": f"""name = exp1
flux.kind = rational
potential.theta = 2
model.epsilon = 0.1
init.layers = {_SIX_LAYERS}
run.horizon = 1e5
expect.times = 7e3, 2.9e4
expect.events = 6>4, 4>2
""",
    "exp2-slow": f"""name = exp2-slow
flux.kind = rational
flux.alpha = 0.25
potential.theta = 2
model.epsilon = 0.1
init.layers = {_SIX_LAYERS}
run.horizon = 1e12
expect.times = 1e10
expect.events = 6>4
expect.factor = 10
""",
    "exp2-fast": f"""name = exp2-fast
flux.kind = rational
flux.alpha = 2
potential.theta = 2
model.epsilon = 0.1
init.layers = {_SIX_LAYERS}
run.horizon = 2e3
expect.times = 200, 470
expect.events = 6>4, 4>2
""",
    "exp3": f"""name = exp3
flux.kind = rational
potential.theta = 2
model.epsilon = 0.1
{_TWO_BLOCKS}run.horizon = 1e12
expect.times = 1e11
expect.events = 2>1
expect.factor = 10
""",
    "exp4a": f"""name = exp4a
flux.kind = gaussian
potential.theta = 4
model.epsilon = 0.1
init.layers = {_SIX_LAYERS}
run.horizon = 5e3
expect.times = 450
expect.events = 4>2
""",
    "exp4b": f"""name = exp4b
flux.kind = gaussian
potential.theta = 3
model.epsilon = 0.1
{_TWO_BLOCKS}run.horizon = 1e6
expect.times = 8e4
expect.events = 2>1
""",
    "family-d": """name = family-d
flux.kind = rational
potential.theta = 2
model.epsilon = 0.1
model.a = -2
model.b = 2
grid.cells = 1024
init.layers = -0.5, 0.5
family.param = d
family.values = 0.8, 1.0, 1.2
family.horizon = 1e12
""",
    "family-eps2": """name = family-eps2
flux.kind = rational
potential.theta = 2
model.epsilon = 0.1
model.a = -2
model.b = 2
grid.cells = 1024
init.layers = -0.45, 0.45
family.param = eps
family.values = 0.08, 0.1, 0.12
family.horizon = 1e12
""",
    "family-eps4": """name = family-eps4
flux.kind = gaussian
potential.theta = 4
model.epsilon = 0.1
model.a = -2
model.b = 2
grid.cells = 1024
init.layers = -0.5, 0.5
family.param = eps
family.values = 0.08, 0.1, 0.12
family.horizon = 1e12
""",
}

#: presets whose reference times lie beyond 1e8 (run on demand only)
LONG_RUNS = ("exp2-slow", "exp3")


def preset_config(name: str) -> dict:
    if name not in PRESET_TEXT:
        raise ConfigError("preset", f"unknown preset {name!r}; known: {', '.join(sorted(PRESET_TEXT))}")
    return parse(PRESET_TEXT[name])
