from __future__ import annotations

import functools
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from . import __version__
from .cavity import (
    RESIDUAL_COLUMNS,
    SWEEP_COLUMNS,
    JchSystem,
    ResonatorParams,
    dispersive_sweep,
    dispersive_transform,
    extract_jch_params,
    regime_check,
)
from .circuits.hamiltonian import (
    Josephson,
    Kinetic,
    Linear,
    Quadratic,
    build_hamiltonian,
    ej_for_beta,
    flux_qubit_spec,
    reduce_flux_bias,
)
from .circuits.netlist import Topology, parse_netlist
from .circuits.spectrum import (
    SPECTRUM_COLUMNS,
    GridConfig,
    double_well_report,
    solve_flux_spectrum,
    spectrum_table,
)
from .circuits.washboard import washboard_analysis
from .errors import PotentialShapeError, RegimeError, TopologyError, ValidationError
from .optics import (
    InteractionGeometry,
    electric_deflection,
    electron_kinematics,
    magnetic_deflection,
    photon_budget,
    photons_for_electric,
    plate_electrons,
    radiation_budget,
    which_way_report,
    work_closed_form,
)
from .physcore import CONSTANTS, RngSpec, parse_quantity
from .protocol.montecarlo import DEFAULT_CHUNK_SIZE, monte_carlo
from .protocol.qnd import (
    cnot_role_reversal_check,
    detector_requirement,
    phase_flip_equivalence_check,
    qnd_chain_miss_probability,
)
from .protocol.runner import classical_detection_probability, detection_probability, small_delta_approximations
from .storage.report_store import FORMATS, RunManifest, output_path, write_json, write_table

LOG = logging.getLogger(__name__)
logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(name)s - %(message)s")

app = typer.Typer(add_completion=False, help="Qubit-assisted electron microscopy calculations.")
console = Console(force_terminal=False, color_system=None, emoji=False)
err_console = Console(stderr=True, force_terminal=False, color_system=None, emoji=False)

DEFAULT_SEED = 20240229
PROTOCOL_COLUMNS = [
    "k",
    "delta",
    "eta",
    "analytic_p",
    "classical_p",
    "mc_freq",
    "mc_ci_low",
    "mc_ci_high",
    "failure_freq",
    "trials",
    "seed",
    "stream",
    "ratio",
    "small_delta_quantum",
    "small_delta_classical",
    "small_delta_classical_linear",
]
FLUX_SCAN_COLUMNS = ["phi_Wb", "theta_rad", "ratio_diffraction", "ratio_aharonov_bohm", "beam_shift_m"]
CHARGE_SCAN_COLUMNS = ["q_C", "theta_rad", "ratio_diffraction", "work_J"]
IMPEDANCE_SCAN_COLUMNS = ["Z_r_ohm", "n_photons_magnetic", "n_photons_electric", "electric_to_magnetic"]
# sweep parameter -> (dimension of its values, integer grid)
SCAN_PARAMS = {
    "k": ("dimensionless", True),
    "delta": ("angle", False),
    "eta": ("dimensionless", False),
    "phi": ("flux", False),
    "q": ("charge", False),
    "Z_r": ("resistance", False),
}


@dataclass(frozen=True)
class Settings:
    seed: int
    out: Path
    fmt: str


def _guarded(func):
    """Map library errors onto exit codes: 2 for validation, 1 for anything unexpected."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (typer.Exit, typer.Abort, typer.BadParameter):
            raise
        except ValidationError as exc:
            err_console.print(f"error: {exc}", markup=False)
            raise typer.Exit(code=2)
        except Exception as exc:
            LOG.debug("Internal error", exc_info=True)
            err_console.print(f"internal error: {type(exc).__name__}: {exc}", markup=False)
            raise typer.Exit(code=1)

    return wrapper


def _q(text: str, dimension: str, allow_bare: bool = False) -> float:
    return parse_quantity(text, dimension, allow_bare=allow_bare)


def _settings(ctx: typer.Context) -> Settings:
    if ctx.obj is None:
        return Settings(seed=DEFAULT_SEED, out=Path("results"), fmt="csv")
    return ctx.obj


def _print_pairs(title: str, rows: List[tuple]) -> None:
    t = Table(title=title, show_header=False)
    t.add_column("Quantity")
    t.add_column("Value")
    for key, value in rows:
        t.add_row(key, value)
    console.print(t)


def _print_frame(df: pd.DataFrame, title: str, max_rows: int = 20) -> None:
    t = Table(title=title)
    for col in df.columns:
        t.add_column(str(col))
    for _, row in df.head(max_rows).iterrows():
        t.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row.tolist()))
    console.print(t)
    if len(df) > max_rows:
        console.print(f"... {len(df) - max_rows} more rows")


def _print_constants() -> None:
    t = Table(title=f"Physical constants ({CONSTANTS.version})")
    t.add_column("Name")
    t.add_column("Value")
    for name, value in CONSTANTS.as_dict().items():
        t.add_row(name, value if isinstance(value, str) else f"{value:.12g}")
    console.print(t)


def _emit_table(settings: Settings, stem: str, df: pd.DataFrame, columns, manifest: RunManifest) -> Path:
    path = write_table(df, output_path(settings.out, stem, settings.fmt), settings.fmt, columns, manifest)
    console.print(f"[green]Wrote[/green] {path}")
    return path


def _emit_json(settings: Settings, stem: str, payload: Dict[str, Any], manifest: RunManifest) -> Path:
    path = write_json(payload, Path(settings.out) / f"{stem}.json", manifest)
    console.print(f"[green]Wrote[/green] {path}")
    return path


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    seed: int = typer.Option(DEFAULT_SEED, help="Master seed for sampled quantities"),
    out: Path = typer.Option(Path("results"), help="Output directory"),
    fmt: str = typer.Option("csv", "--format", help="Table format: csv, json or parquet"),
    constants: Optional[str] = typer.Option(None, help="'print' shows the constant table"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    if fmt not in FORMATS:
        raise typer.BadParameter(f"Unsupported format {fmt}", param_hint="--format")
    if constants not in (None, "print"):
        raise typer.BadParameter(f"Unsupported value {constants}", param_hint="--constants")
    if not 0 <= seed < 2**64:
        raise typer.BadParameter(f"seed must be a 64-bit unsigned integer, got {seed}", param_hint="--seed")
    ctx.obj = Settings(seed=seed, out=out, fmt=fmt)
    if constants == "print":
        _print_constants()
    elif ctx.invoked_subcommand is None:
        console.print(ctx.get_help())


# ---------------------------------------------------------------------------
# circuits
# ---------------------------------------------------------------------------


def _parse_grid(text: str):
    if text == "auto":
        return "auto"
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValidationError(f"grid must be 'auto' or 'min,max,n', got '{text}'")
    try:
        n_points = int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"grid point count must be an integer, got '{parts[2]}'") from exc
    return GridConfig(_q(parts[0], "flux"), _q(parts[1], "flux"), n_points)


def _washboard_payload(spec) -> Dict[str, Any]:
    (kin,) = spec.terms_of(Kinetic)
    (jj,) = spec.terms_of(Josephson)
    # the bias current and a current-source-limit flux both enter as I_b phi
    I_b = sum(t.coefficient for t in spec.terms_of(Linear))
    report = washboard_analysis(jj.E_J, kin.C, I_b)
    return asdict(report)


@app.command("spectrum")
@_guarded
def spectrum_cmd(
    ctx: typer.Context,
    netlist: Path = typer.Argument(..., help="Netlist file"),
    levels: int = typer.Option(4, help="Number of levels"),
    grid: str = typer.Option("auto", help="'auto' or 'min,max,n' with flux units, e.g. -1phi0,1phi0,4001"),
    current_source_limit: bool = typer.Option(False, help="Treat the loop inductor as an ideal current source"),
):
    """Energy levels of a single-loop circuit."""
    settings = _settings(ctx)
    try:
        text = Path(netlist).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read netlist {netlist}: {exc}") from exc
    net = parse_netlist(text)
    if net.topology == Topology.COUPLED_PAIR:
        raise TopologyError("spectrum needs a single dynamical loop; use the couple command for a coupled pair")
    spec = build_hamiltonian(net)
    if spec.biases or current_source_limit:
        spec = reduce_flux_bias(spec, current_source_limit=current_source_limit)
    params = {
        "netlist": str(netlist),
        "topology": net.topology.value,
        "levels": levels,
        "grid": grid,
        "current_source_limit": current_source_limit,
    }
    console.print(f"[bold]Topology:[/bold] {net.topology.value}   {spec.describe()}")

    if spec.terms_of(Linear) and not spec.terms_of(Quadratic):
        payload = _washboard_payload(spec)
        _print_pairs("Washboard", [(k, f"{v:.6g}" if isinstance(v, float) else str(v)) for k, v in payload.items()])
        _emit_json(settings, "washboard", payload, RunManifest.create("spectrum", params))
        return

    result = solve_flux_spectrum(spec, _parse_grid(grid), levels)
    df = spectrum_table(result)
    _print_frame(df, "Spectrum")
    console.print(f"Convergence (relative change on grid doubling): {result.convergence:.2e}")
    if net.topology == Topology.FLUX_QUBIT and levels >= 2:
        try:
            well = double_well_report(spec, result)
            console.print(
                f"Double well: delta_phi = {well.delta_phi / CONSTANTS.phi0:.4f} phi0, "
                f"barrier = {well.barrier_height / CONSTANTS.h / 1e9:.4g} GHz, "
                f"splitting = {well.splitting / CONSTANTS.h / 1e9:.6g} GHz"
            )
        except PotentialShapeError as exc:
            console.print(f"Single well: {exc}")
    manifest = RunManifest.create("spectrum", params)
    _emit_table(settings, "spectrum", df, SPECTRUM_COLUMNS, manifest)
    if net.topology == Topology.CURRENT_BIASED_JJ:
        _emit_json(settings, "washboard", _washboard_payload(spec), manifest)


# ---------------------------------------------------------------------------
# cavity
# ---------------------------------------------------------------------------


def _parse_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected a comma-separated list of numbers, got '{text}'") from exc


@app.command("dispersive")
@_guarded
def dispersive_cmd(
    ctx: typer.Context,
    fr: str = typer.Option(..., help="Resonator frequency, e.g. 5GHz"),
    fq: str = typer.Option(..., help="Qubit frequency, e.g. 6GHz"),
    lam: float = typer.Option(0.01, "--lambda", help="Dimensionless coupling lambda = g/Delta"),
    nmax: int = typer.Option(10, help="Fock cutoff"),
    sweep: Optional[str] = typer.Option(None, help="Comma-separated lambda values for a residual sweep"),
    temperature: Optional[str] = typer.Option(None, help="Also check k_B T < hbar w_r < Delta_Al, e.g. 20mK"),
):
    """Dispersive shifts and their check against exact diagonalization."""
    settings = _settings(ctx)
    omega_r = 2.0 * math.pi * _q(fr, "frequency")
    omega_q = 2.0 * math.pi * _q(fq, "frequency")
    params: Dict[str, Any] = {"fr": fr, "fq": fq, "lambda": lam, "nmax": nmax, "sweep": sweep, "temperature": temperature}

    if sweep is not None:
        result = dispersive_sweep(omega_r, omega_q, _parse_list(sweep), nmax)
        manifest = RunManifest.create("dispersive", params)
        _print_frame(result.table, "Residual sweep")
        console.print(f"Log-log slope of max residual against lambda: {result.slope:.3f}")
        _emit_table(settings, "dispersive_sweep", result.table, SWEEP_COLUMNS, manifest)
        _emit_json(settings, "dispersive_sweep_fit", {"slope": result.slope, "nmax": nmax}, manifest)
        return

    report = dispersive_transform(JchSystem.from_lambda(omega_r, omega_q, lam, nmax))
    payload = report.as_dict()
    if temperature is not None:
        payload["regime"] = regime_check(_q(temperature, "temperature"), omega_r).as_dict()
    manifest = RunManifest.create("dispersive", params)
    shift = payload["qubit_shift_per_photon"]
    _print_pairs(
        "Dispersive regime",
        [
            ("lambda", f"{report.lambda_c:.4g}"),
            ("Delta/h", f"{payload['Delta']['GHz']:.6g} GHz"),
            ("qubit shift per photon", f"{shift['GHz'] * 1e3:.6g} MHz ({shift['ueV']:.4g} ueV)"),
            ("Lamb shift", f"{payload['lamb_shift']['GHz'] * 1e3:.6g} MHz"),
            ("max residual", f"{report.max_residual:.3e} J"),
        ],
    )
    _emit_json(settings, "dispersive", payload, manifest)
    _emit_table(settings, "dispersive_blocks", report.table, RESIDUAL_COLUMNS, manifest)


@app.command("couple")
@_guarded
def couple_cmd(
    ctx: typer.Context,
    fr: str = typer.Option("5GHz", help="Resonator frequency"),
    zr: str = typer.Option("50ohm", help="Resonator characteristic impedance"),
    squid_l: str = typer.Option("1nH", help="rf-SQUID loop inductance"),
    squid_c: str = typer.Option("2fF", help="rf-SQUID capacitance"),
    beta: float = typer.Option(3.0, help="Bistability parameter beta_L"),
    flux: str = typer.Option("0.5phi0", help="Flux bias of the rf-SQUID loop"),
    lc: str = typer.Option(..., help="Coupling inductance L_c"),
    l_tilde: Optional[str] = typer.Option(None, help="Effective resonator inductance (default L_r)"),
    nmax: int = typer.Option(10, help="Fock cutoff"),
):
    """Jaynes-Cummings parameters of a resonator coupled to a flux qubit."""
    settings = _settings(ctx)
    L = _q(squid_l, "inductance")
    res = ResonatorParams.from_frequency(
        _q(fr, "frequency"),
        _q(zr, "resistance"),
        _q(l_tilde, "inductance") if l_tilde is not None else None,
    )
    spec = flux_qubit_spec(L, _q(squid_c, "capacitance"), ej_for_beta(L, beta), flux=_q(flux, "flux"))
    spectrum = solve_flux_spectrum(spec, "auto", 2)
    system = extract_jch_params(res, spectrum, _q(lc, "inductance"), nmax)
    payload: Dict[str, Any] = {
        "omega_r": system.omega_r,
        "omega_q": system.omega_q,
        "f_q_GHz": system.omega_q / (2.0 * math.pi) / 1e9,
        "g_J": system.g,
        "g_MHz": system.g / CONSTANTS.h / 1e6,
        "Delta_J": system.Delta,
        "lambda": system.lambda_c,
        "phi_zpf_Wb": res.phi_zpf,
        "Z_r": res.Z_r,
    }
    try:
        payload["dispersive"] = dispersive_transform(system).as_dict()
    except RegimeError as exc:
        payload["dispersive"] = None
        console.print(f"[yellow]{exc}[/yellow]")
    params = {"fr": fr, "zr": zr, "squid_l": squid_l, "squid_c": squid_c, "beta": beta, "flux": flux, "lc": lc, "l_tilde": l_tilde, "nmax": nmax}
    _print_pairs(
        "Coupled pair",
        [
            ("f_q", f"{payload['f_q_GHz']:.6g} GHz"),
            ("g/h", f"{payload['g_MHz']:.6g} MHz"),
            ("lambda", f"{system.lambda_c:.4g}"),
        ],
    )
    _emit_json(settings, "couple", payload, RunManifest.create("couple", params))


# ---------------------------------------------------------------------------
# optics
# ---------------------------------------------------------------------------


@app.command("deflect")
@_guarded
def deflect_cmd(
    ctx: typer.Context,
    energy: str = typer.Option("100eV", help="Electron kinetic energy"),
    d: str = typer.Option("1um", help="Transverse width of the interaction region"),
    length: str = typer.Option("1um", "--l", help="Length along the beam"),
    flux: Optional[str] = typer.Option(None, help="Loop flux, e.g. 1phi0 (magnetic deflection)"),
    charge: Optional[str] = typer.Option(None, help="Plate charge, e.g. 55e, or 'auto' for beta R_K/Z0 electrons"),
    drift: Optional[str] = typer.Option(None, help="Flight distance to the detector"),
    threshold: str = typer.Option("2phi0", help="Flux criterion: 2phi0 or phi0"),
    tau: Optional[str] = typer.Option(None, help="Electron pulse width"),
    fr: Optional[str] = typer.Option(None, help="Resonator frequency for the which-way check"),
):
    """Deflection of one electron by a flux loop or a charged plate pair."""
    settings = _settings(ctx)
    if flux is not None and charge is not None:
        raise ValidationError("give either --flux or --charge, not both")
    beam = electron_kinematics(_q(energy, "energy"), _q(tau, "time") if tau is not None else None)
    geom = InteractionGeometry(
        d=_q(d, "length"),
        l=_q(length, "length"),
        L_drift=_q(drift, "length") if drift is not None else None,
    )
    payload: Dict[str, Any] = {"beam": asdict(beam)}
    rows = [("wavelength", f"{beam.wavelength * 1e10:.5g} A"), ("beta", f"{beam.beta:.5g}")]
    work = 0.0
    if charge is not None:
        q = plate_electrons(beam.beta) * CONSTANTS.e if charge == "auto" else _q(charge, "charge")
        report = electric_deflection(beam, geom, q)
        closed = work_closed_form(beam, geom)
        work = report.work
        payload.update(
            mode="electric",
            q_C=q,
            n_electrons=q / CONSTANTS.e,
            deflection=report.as_dict(),
            work_closed_form={
                "work_J": closed.work,
                "work_ueV": closed.work / CONSTANTS.e * 1e6,
                "coulomb_energy_meV": closed.coulomb_energy / CONSTANTS.e * 1e3,
                "prefactor": closed.prefactor,
            },
        )
        rows += [
            ("plate electrons", f"{q / CONSTANTS.e:.4g}"),
            ("W", f"{report.work / CONSTANTS.e * 1e6:.4g} ueV"),
            ("W (closed form)", f"{closed.work / CONSTANTS.e * 1e6:.4g} ueV"),
        ]
    else:
        phi = _q(flux if flux is not None else "1phi0", "flux")
        report = magnetic_deflection(beam, geom, phi, threshold)
        payload.update(mode="magnetic", flux_Wb=phi, deflection=report.as_dict())
    rows += [
        ("theta", f"{report.theta:.4g} rad"),
        ("theta / (lambda/d)", f"{report.ratio_diffraction:.6g}"),
        ("distinguishable", str(report.distinguishable)),
    ]
    if report.beam_shift is not None:
        rows.append(("beam shift", f"{report.beam_shift * 1e6:.4g} um"))

    if tau is not None and fr is not None:
        ww = which_way_report(beam, 2.0 * math.pi * _q(fr, "frequency"), work)
        payload["which_way"] = ww.as_dict()
        rows.append(("hides which-way", str(ww.hides_which_way)))

    params = {"energy": energy, "d": d, "l": length, "flux": flux, "charge": charge, "drift": drift, "threshold": threshold, "tau": tau, "fr": fr}
    _print_pairs("Deflection", rows)
    _emit_json(settings, "deflect", payload, RunManifest.create("deflect", params))


@app.command("budget")
@_guarded
def budget_cmd(
    ctx: typer.Context,
    zr: str = typer.Option("376.730313ohm", help="Resonator characteristic impedance"),
    energy: str = typer.Option("300keV", help="Electron kinetic energy (sets beta)"),
    beta: Optional[float] = typer.Option(None, help="Override beta = v/c"),
    t_hot: str = typer.Option("300K", help="Warm surroundings"),
    t_shield: str = typer.Option("60K", help="Radiation shield"),
    aperture: str = typer.Option("100um2", help="Aperture area"),
):
    """Photon, plate-charge and thermal-radiation budgets."""
    settings = _settings(ctx)
    Z_r = _q(zr, "resistance")
    b = beta if beta is not None else electron_kinematics(_q(energy, "energy")).beta
    photons = photon_budget(Z_r, b)
    electric = photons_for_electric(Z_r, b)
    radiation = radiation_budget(_q(t_hot, "temperature"), _q(t_shield, "temperature"), _q(aperture, "area"))
    payload = {
        "beta": b,
        "photons": asdict(photons),
        "electric_to_magnetic": electric.ratio_to_magnetic,
        "radiation": asdict(radiation),
        "hole_flux_nW": radiation.hole_flux * 1e9,
        "wien_peak_um": radiation.wien_peak * 1e6,
    }
    _print_pairs(
        "Budgets",
        [
            ("photons (magnetic)", f"{photons.n_photons_magnetic:.4g}"),
            ("plate electrons", f"{photons.n_electrons_plate:.4g}"),
            ("photons (electric)", f"{photons.n_photons_electric:.4g}"),
            ("electric / magnetic", f"{electric.ratio_to_magnetic:.4g}"),
            ("hole flux", f"{radiation.hole_flux * 1e9:.4g} nW"),
            ("shield factor", "n/a" if radiation.shield_factor is None else f"{radiation.shield_factor:.4g}"),
            ("Wien peak", f"{radiation.wien_peak * 1e6:.4g} um"),
        ],
    )
    params = {"zr": zr, "energy": energy, "beta": beta, "t_hot": t_hot, "t_shield": t_shield, "aperture": aperture}
    _emit_json(settings, "budget", payload, RunManifest.create("budget", params))


# ---------------------------------------------------------------------------
# protocol
# ---------------------------------------------------------------------------


def _protocol_row(
    k: int,
    delta: float,
    eta: float,
    trials: int,
    seed: int,
    workers: Optional[int],
    chunk_size: int,
    defer_correction: bool,
    progress: Optional[Progress] = None,
    stream: int = 0,
):
    analytic = detection_probability(k, delta)
    classical = classical_detection_probability(k, delta)
    approx = small_delta_approximations(k, delta)
    row = {
        "k": k,
        "delta": delta,
        "eta": eta,
        "analytic_p": analytic,
        "classical_p": classical,
        "mc_freq": math.nan,
        "mc_ci_low": math.nan,
        "mc_ci_high": math.nan,
        "failure_freq": math.nan,
        "trials": trials,
        "seed": seed,
        "stream": stream,
        "ratio": analytic / classical if classical > 0 else math.nan,
        "small_delta_quantum": approx["quantum"],
        "small_delta_classical": approx["classical"],
        "small_delta_classical_linear": approx["classical_linear"],
    }
    if trials < 0:
        raise ValidationError(f"trials must be >= 0, got {trials}")
    if trials == 0:
        return row, None
    on_chunk = None
    if progress is not None:
        task = progress.add_task(f"k={k} delta={delta:.4g}", total=math.ceil(trials / chunk_size))
        on_chunk = lambda chunk: progress.advance(task)  # noqa: E731
    report = monte_carlo(
        k,
        delta,
        eta,
        trials,
        RngSpec(seed).stream(stream),
        workers=workers,
        chunk_size=chunk_size,
        on_chunk=on_chunk,
        defer_correction=defer_correction,
    )
    row.update(
        mc_freq=report.detect_freq,
        mc_ci_low=report.detect_ci[0],
        mc_ci_high=report.detect_ci[1],
        failure_freq=report.run_failure_freq,
    )
    return row, report


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(spinner_name="dots"),
        TextColumn("{task.description}"),
        BarColumn(),
        TimeElapsedColumn(),
        console=console,
    )


@app.command("protocol")
@_guarded
def protocol_cmd(
    ctx: typer.Context,
    k: int = typer.Option(10, help="Electrons per measurement"),
    delta: float = typer.Option(0.01, help="Specimen phase shift per pass (rad)"),
    eta: float = typer.Option(1.0, help="Detector efficiency"),
    trials: int = typer.Option(0, help="Monte Carlo trials (0: analytic only)"),
    workers: Optional[int] = typer.Option(None, help="Worker threads"),
    chunk_size: int = typer.Option(DEFAULT_CHUNK_SIZE, help="Trials per random stream"),
    defer_correction: bool = typer.Option(False, help="Apply the phase correction once at the end"),
):
    """Detection probability of the qubit-assisted measurement."""
    settings = _settings(ctx)
    with _progress() as progress:
        row, report = _protocol_row(k, delta, eta, trials, settings.seed, workers, chunk_size, defer_correction, progress)
    df = pd.DataFrame([row], columns=PROTOCOL_COLUMNS)
    _print_frame(df, "Protocol")
    params = {"k": k, "delta": delta, "eta": eta, "trials": trials, "workers": workers, "chunk_size": chunk_size, "defer_correction": defer_correction}
    manifest = RunManifest.create("protocol", params, RngSpec(settings.seed) if trials else None)
    _emit_table(settings, "protocol", df, PROTOCOL_COLUMNS, manifest)
    if report is not None:
        if report.all_failed:
            console.print("[yellow]Every run lost at least one electron; no detection frequency.[/yellow]")
        payload = report.as_dict()
        payload["small_delta"] = small_delta_approximations(k, delta)
        _emit_json(settings, "protocol_report", payload, manifest)


@app.command("qnd-check")
@_guarded
def qnd_check_cmd(
    ctx: typer.Context,
    k: int = typer.Option(10, help="Electrons per measurement"),
    target: float = typer.Option(0.9, help="Required whole-run success probability"),
    miss: Optional[float] = typer.Option(None, help="Miss probability of one QND detector"),
):
    """Control/target role reversal of the interaction and detector budgets."""
    settings = _settings(ctx)
    reversal = cnot_role_reversal_check()
    flip_error = phase_flip_equivalence_check()
    req = detector_requirement(k, target)
    payload: Dict[str, Any] = {
        "role_reversal_max_error": reversal.max_elementwise_error,
        "phase_flip_max_error": flip_error,
        "symmetric_basis_matrix": reversal.symmetric_basis.real,
        "detector_requirement": {
            "k": k,
            "target_success": target,
            "miss_qubit_assisted": req.miss_qubit_assisted,
            "miss_multi_pass": req.miss_multi_pass,
            "strictness": req.strictness,
        },
    }
    rows = [
        ("role reversal error", f"{reversal.max_elementwise_error:.2e}"),
        ("phase-flip equivalence error", f"{flip_error:.2e}"),
        ("allowed miss (qubit-assisted)", f"{req.miss_qubit_assisted:.4g}"),
        ("allowed miss (multi-pass)", f"{req.miss_multi_pass:.4g}"),
    ]
    if miss is not None:
        n = req.detectors_needed(miss)
        payload["detector_requirement"]["detectors_needed"] = n
        payload["detector_requirement"]["chain_miss"] = qnd_chain_miss_probability(n, miss)
        rows.append(("QND detectors in series", str(n)))
    _print_pairs("QND check", rows)
    _emit_json(settings, "qnd", payload, RunManifest.create("qnd-check", {"k": k, "target": target, "miss": miss}))


def _scan_values(param: str, start: str, stop: str, steps: Optional[int], log: bool) -> np.ndarray:
    dimension, integer = SCAN_PARAMS[param]
    allow_bare = dimension in ("dimensionless", "angle")
    lo, hi = _q(start, dimension, allow_bare), _q(stop, dimension, allow_bare)
    if integer:
        lo, hi = int(round(lo)), int(round(hi))
    if steps is None:
        steps = hi - lo + 1 if integer else 11
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    if log:
        if lo <= 0 or hi <= 0:
            raise ValidationError("a log grid needs positive end points")
        values = np.geomspace(lo, hi, steps)
    else:
        values = np.linspace(lo, hi, steps)
    if integer:
        values = np.unique(np.round(values).astype(int))
    return values


@app.command("scan")
@_guarded
def scan_cmd(
    ctx: typer.Context,
    param: str = typer.Option(..., help="Sweep parameter: k, delta, eta, phi, q or Z_r"),
    start: str = typer.Option(..., "--from", help="First value"),
    stop: str = typer.Option(..., "--to", help="Last value"),
    steps: Optional[int] = typer.Option(None, help="Grid points (default: every integer for k, else 11)"),
    log: bool = typer.Option(False, help="Logarithmic grid"),
    k: int = typer.Option(10, help="Electrons per measurement"),
    delta: float = typer.Option(0.01, help="Phase shift per pass (rad)"),
    eta: float = typer.Option(1.0, help="Detector efficiency"),
    trials: int = typer.Option(0, help="Monte Carlo trials per point"),
    workers: Optional[int] = typer.Option(None, help="Worker threads"),
    chunk_size: int = typer.Option(DEFAULT_CHUNK_SIZE, help="Trials per random stream"),
    energy: str = typer.Option("100eV", help="Electron kinetic energy (phi and q sweeps)"),
    d: str = typer.Option("1um", help="Interaction width (phi and q sweeps)"),
    drift: Optional[str] = typer.Option(None, help="Flight distance (phi sweep)"),
):
    """Sweep one parameter and write one row per grid point."""
    settings = _settings(ctx)
    if param not in SCAN_PARAMS:
        raise ValidationError(f"unknown sweep parameter '{param}', expected one of {sorted(SCAN_PARAMS)}")
    values = _scan_values(param, start, stop, steps, log)
    rows: List[dict] = []
    rng: Optional[RngSpec] = None

    if param in ("k", "delta", "eta"):
        columns = PROTOCOL_COLUMNS
        rng = RngSpec(settings.seed) if trials else None
        with _progress() as progress:
            # one random stream per grid point keeps the estimates independent
            for i, value in enumerate(values):
                point = {"k": k, "delta": delta, "eta": eta}
                point[param] = int(value) if param == "k" else float(value)
                row, _ = _protocol_row(
                    point["k"], point["delta"], point["eta"], trials, settings.seed, workers, chunk_size, False, progress, i
                )
                rows.append(row)
    elif param == "Z_r":
        columns = IMPEDANCE_SCAN_COLUMNS
        beta = electron_kinematics(_q(energy, "energy")).beta
        for value in values:
            budget = photon_budget(float(value), beta)
            rows.append(
                {
                    "Z_r_ohm": float(value),
                    "n_photons_magnetic": budget.n_photons_magnetic,
                    "n_photons_electric": budget.n_photons_electric,
                    "electric_to_magnetic": photons_for_electric(float(value), beta).ratio_to_magnetic,
                }
            )
    else:
        beam = electron_kinematics(_q(energy, "energy"))
        geom = InteractionGeometry(d=_q(d, "length"), L_drift=_q(drift, "length") if drift is not None else None)
        if param == "phi":
            columns = FLUX_SCAN_COLUMNS
            for value in values:
                rep = magnetic_deflection(beam, geom, float(value))
                rows.append(
                    {
                        "phi_Wb": float(value),
                        "theta_rad": rep.theta,
                        "ratio_diffraction": rep.ratio_diffraction,
                        "ratio_aharonov_bohm": rep.ratio_aharonov_bohm,
                        "beam_shift_m": rep.beam_shift if rep.beam_shift is not None else math.nan,
                    }
                )
        else:
            columns = CHARGE_SCAN_COLUMNS
            for value in values:
                rep = electric_deflection(beam, geom, float(value))
                rows.append(
                    {"q_C": float(value), "theta_rad": rep.theta, "ratio_diffraction": rep.ratio_diffraction, "work_J": rep.work}
                )

    df = pd.DataFrame(rows, columns=columns)
    params = {
        "param": param,
        "from": start,
        "to": stop,
        "steps": steps,
        "log": log,
        "k": k,
        "delta": delta,
        "eta": eta,
        "trials": trials,
        "chunk_size": chunk_size,
        "energy": energy,
        "d": d,
        "drift": drift,
    }
    _print_frame(df, f"Scan over {param}")
    _emit_table(settings, f"scan_{param}", df, columns, RunManifest.create("scan", params, rng))


@app.command("version")
def version_cmd():
    console.print(f"qatem {__version__}")


if __name__ == "__main__":
    app()
