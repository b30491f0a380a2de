"""Reproduction driver for the simulation tables.

Each table is a list of sections (empirical size or power of one model) over
an (n, p) grid.  The ``full`` preset uses the published grid with
K = 1000; ``desk`` uses a smaller grid containing the cells checked by the
acceptance suite, with K = 500.
"""

from dataclasses import dataclass, field

from ..calibrate import (STREAM_EVAL, HarnessReport, StatConfig, rejection_rate,
                         simulate_statistics)
from ..genmodels import ModelSpec, null_counterpart
from ..lrt import lrt_size_power
from .cache import CalibrationCache

FULL_GRID = (5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
VDM_GRID = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 120)
PRESET_K = {"desk": 500, "full": 1000}


@dataclass(frozen=True)
class Section:
    name: str
    model: ModelSpec
    null: ModelSpec


@dataclass(frozen=True)
class TableDef:
    table_id: str
    title: str
    sections: tuple
    desk_n: tuple
    desk_p: tuple
    full_n: tuple = FULL_GRID
    full_p: tuple = FULL_GRID
    lrt: bool = False

    def grid(self, preset):
        ns, ps = (self.desk_n, self.desk_p) if preset == "desk" else (self.full_n, self.full_p)
        return [(n, p) for n in ns for p in ps]

    def axes(self, preset):
        return (self.desk_n, self.desk_p) if preset == "desk" else (self.full_n, self.full_p)


def _size(model):
    return Section("size", model, model)


def _power(model):
    return Section("power", model, null_counterpart(model))


_NORMAL = ModelSpec("iid", "normal")
_GAMMA = ModelSpec("iid", "std_gamma_4_2")

TABLES = {
    t.table_id: t for t in (
        TableDef("t1", "normal sizes and compound-symmetric powers",
                 (_size(_NORMAL), _power(ModelSpec("compound_symmetric", "normal"))),
                 (20, 50, 90, 100), (20, 50, 100)),
        TableDef("t2", "likelihood-ratio test, normal sizes and compound-symmetric powers",
                 (_size(_NORMAL), _power(ModelSpec("compound_symmetric", "normal"))),
                 (5, 30, 100), (5, 20, 30, 40), lrt=True),
        TableDef("t3", "gamma sizes and compound-symmetric powers",
                 (_size(_GAMMA), _power(ModelSpec("compound_symmetric", "std_gamma_4_2"))),
                 (20, 50, 100), (20, 50, 100)),
        TableDef("t4", "MA(1) powers, psi = 0.5",
                 (_power(ModelSpec("ma1", psi=0.5)),), (20, 50, 100), (10, 20, 50)),
        TableDef("t_ar", "AR(1) powers, phi = 0.5",
                 (_power(ModelSpec("ar1", phi=0.5)),), (20, 50, 100), (10, 20, 50)),
        TableDef("t_sma", "SMA powers, uniform study weights",
                 (_power(ModelSpec("sma", "normal_mu1")),), (10, 20, 50), (10, 20, 50)),
        TableDef("t_panel", "panel model sizes and powers",
                 (_size(ModelSpec("panel", u_mode="null")),
                  Section("power", ModelSpec("panel", u_mode="alt"),
                          ModelSpec("panel", u_mode="null"))),
                 (20, 50, 100), (20, 50, 100)),
        TableDef("t_nma", "nonlinear MA powers",
                 (_power(ModelSpec("nonlinear_ma")),), (20, 50, 100), (20, 50, 100)),
        TableDef("t_arch", "ARCH(1) squared-series powers",
                 (_power(ModelSpec("arch1", alpha0=0.9, alpha1=0.1, square=True)),),
                 (50, 100), (20, 60, 100)),
        TableDef("t_vdm", "Vandermonde powers",
                 (_power(ModelSpec("vandermonde")),), (20, 50, 100), (20, 50, 100),
                 full_n=VDM_GRID, full_p=VDM_GRID),
    )
}


@dataclass
class TableResult:
    table: TableDef
    preset: str
    K: int
    seed: int
    sections: dict = field(default_factory=dict)  # name -> HarnessReport

    def cell(self, section, n, p):
        rep = self.sections[section]
        return rep.estimates[rep.grid.index((n, p))]


def get_table(table_id) -> TableDef:
    try:
        return TABLES[table_id]
    except KeyError:
        raise KeyError(f"unknown table id {table_id!r}; choose from {sorted(TABLES)}") from None


def cell_estimate(section: Section, n, p, K_cal, K_eval, alpha, seed, config: StatConfig,
                  cache: CalibrationCache, threads=1):
    calib = cache.calibration(n, p, section.null, config, K_cal, seed, alpha, threads)
    stats = simulate_statistics(section.model, n, p, K_eval, seed, STREAM_EVAL, config, threads)
    return rejection_rate(calib, stats)


def run_table(table_id, preset="desk", seed=0, alpha=0.05, config: StatConfig = StatConfig(),
              cache: CalibrationCache | None = None, threads=1, K=None, progress=None):
    """Fill every section of a table; returns a :class:`TableResult`."""
    table = get_table(table_id)
    if preset not in PRESET_K:
        raise ValueError(f"unknown preset {preset!r}")
    K = PRESET_K[preset] if K is None else K
    cache = CalibrationCache(enabled=False) if cache is None else cache
    grid = table.grid(preset)
    result = TableResult(table, preset, K, seed)
    for section in table.sections:
        estimates, degenerate = [], []
        for n, p in grid:
            if table.lrt:
                rep = lrt_size_power(n, p, section.model, K, alpha, seed)
                estimates.append(rep.estimates[0])
                degenerate.append(rep.extras["degenerate_fraction"][0])
            else:
                estimates.append(cell_estimate(section, n, p, K, K, alpha, seed, config,
                                               cache, threads))
            if progress is not None:
                progress(section.name, n, p, estimates[-1])
        extras = {"degenerate_fraction": degenerate} if table.lrt else {}
        result.sections[section.name] = HarnessReport(
            f"{table_id}:{section.name}:{section.model.label()}", grid, estimates, K, seed, extras)
    return result


def wide_rows(result: TableResult):
    """Header and rows laid out like the printed table: one row per (section, n)."""
    ns, ps = result.table.axes(result.preset)
    header = ["section", "n"] + [f"p={p}" for p in ps]
    rows = []
    for name, rep in result.sections.items():
        blocks = [(name, rep.estimates)]
        if "degenerate_fraction" in rep.extras:
            blocks.append((f"{name}_degenerate", rep.extras["degenerate_fraction"]))
        for label, values in blocks:
            lookup = dict(zip(rep.grid, values))
            for n in ns:
                rows.append([label, n] + [float(lookup[(n, p)]) for p in ps])
    return header, rows
