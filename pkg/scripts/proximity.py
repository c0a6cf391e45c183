"""Grid scan of log sup [f^n, a] on a disk with the fitted square-root budget."""

from dataclasses import dataclass

from _config import emit, parse_config

from adelicdiv import experiments as ex
from adelicdiv.grammar import parse_map


@dataclass
class ProximityConfig:
    map: str = "z^2"
    target: str = "id"
    center_re: float = 1.0
    center_im: float = 0.0
    radius: float = 0.25
    n_max: int = 20
    grid: int = 4096
    output: str | None = None


def main(argv=None) -> None:
    cfg = parse_config(ProximityConfig, argv)
    rows = ex.proximity_scan(parse_map(cfg.map), parse_map(cfg.target), complex(cfg.center_re, cfg.center_im),
                             cfg.radius, range(1, cfg.n_max + 1), cfg.grid)
    C, ok = ex.fit_proximity_constant(rows)
    emit(cfg, {"rows": ex.rows_to_dicts(rows), "fitted_C": C, "within_budget": ok}, cfg.output)


if __name__ == "__main__":
    main()
