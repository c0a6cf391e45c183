"""Monte Carlo equilibrium energy against the resultant formula for a list of maps."""

from dataclasses import dataclass, field

from _config import emit, parse_config

from adelicdiv import archimedean as arch
from adelicdiv.grammar import parse_map


@dataclass
class EnergyConfig:
    maps: list = field(default_factory=lambda: ["z^2", "z^2-1", "z^2+1/4", "z^3-3*z", "2*z^3-1"])
    pairs: int = 10_000
    seed: int = 0
    output: str | None = None


def main(argv=None) -> None:
    cfg = parse_config(EnergyConfig, argv)
    rows = []
    for i, text in enumerate(cfg.maps):
        F = parse_map(text)
        est = arch.energy_estimate(F, arch.equilibrium_sample(F, 2 * cfg.pairs, seed=cfg.seed + i))
        rows.append({"map": text, "estimate": est.estimate, "stderr": est.stderr, "target": est.target,
                     "z_score": est.z_score})
    emit(cfg, {"rows": rows}, cfg.output)


if __name__ == "__main__":
    main()
