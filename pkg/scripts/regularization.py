"""Regularized Fekete inequalities at infinity and at small primes across an eps grid."""

from dataclasses import dataclass, field

from _config import emit, parse_config

from adelicdiv import archimedean as arch
from adelicdiv import experiments as ex


@dataclass
class RegularizationConfig:
    eps: list = field(default_factory=lambda: [10.0**-k for k in range(1, 7)])
    primes: list = field(default_factory=lambda: [2, 3])
    output: str | None = None


def main(argv=None) -> None:
    cfg = parse_config(RegularizationConfig, argv)
    rows = ex.regularized_inequality_suite(ex.default_corpus(), cfg.eps, cfg.primes)
    emit(cfg, {"C_meas": arch.fit_regularization_constant(cfg.eps), "all_hold": all(r.holds for r in rows),
               "rows": ex.rows_to_dicts(rows)}, cfg.output)


if __name__ == "__main__":
    main()
