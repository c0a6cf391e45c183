"""Normalized Fekete sums of [f^n = a] next to the envelope forced by regularization."""

from dataclasses import dataclass

from _config import emit, parse_config

from adelicdiv import experiments as ex
from adelicdiv.grammar import parse_map


@dataclass
class FeketeConfig:
    map: str = "z^2"
    target: str = "id"
    n_max: int = 10
    output: str | None = None


def main(argv=None) -> None:
    cfg = parse_config(FeketeConfig, argv)
    rows = ex.fekete_config_check(parse_map(cfg.map), parse_map(cfg.target), range(1, cfg.n_max + 1))
    emit(cfg, {"rows": ex.rows_to_dicts(rows), "all_within": all(r.within for r in rows)}, cfg.output)


if __name__ == "__main__":
    main()
