"""Upper bounds and exact heights of [f^n = a] for several (f, a) pairs."""

from dataclasses import asdict, dataclass, field

from _config import emit, parse_config

from adelicdiv.grammar import parse_map
from adelicdiv.heights import heights_smallness_scan


@dataclass
class SmallnessConfig:
    pairs: list = field(default_factory=lambda: [["z^2", "id"], ["z^2-2", "0"], ["z^2-1", "id"]])
    n_max: int = 8
    samples: int = 4096
    seed: int = 0
    output: str | None = None


def main(argv=None) -> None:
    cfg = parse_config(SmallnessConfig, argv)
    out = []
    for f, a in cfg.pairs:
        rows = heights_smallness_scan(parse_map(f), parse_map(a), range(1, cfg.n_max + 1), cfg.samples, cfg.seed)
        out.append({"map": f, "target": a, "rows": [asdict(r) for r in rows]})
    emit(cfg, {"scans": out}, cfg.output)


if __name__ == "__main__":
    main()
