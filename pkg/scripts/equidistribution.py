"""Discrepancy of [f^n = a] against the equilibrium measure, with fitted constants."""

from dataclasses import dataclass

from _config import emit, parse_config

from adelicdiv import experiments as ex
from adelicdiv.grammar import parse_map


@dataclass
class EquidistConfig:
    """Equidistribution scan for one map and target."""

    map: str = "z^2 - 1"
    target: str = "id"
    n_min: int = 2
    n_max: int = 10
    samples: int = 2**15
    fit_from: int = 4
    output: str | None = None


def main(argv=None) -> None:
    cfg = parse_config(EquidistConfig, argv)
    rows = ex.equidist_run(parse_map(cfg.map), parse_map(cfg.target), range(cfg.n_min, cfg.n_max + 1), samples=cfg.samples)
    emit(cfg, {"rows": ex.rows_to_dicts(rows), "fitted": ex.fitted_constants(rows, cfg.fit_from)}, cfg.output)


if __name__ == "__main__":
    main()
