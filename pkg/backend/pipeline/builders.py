"""
Builders: RunConfig sections -> typed module objects.

Any InvalidSpec raised while building is re-raised as ConfigError naming
the section, so bad values surface as configuration errors.
"""
import sys
from dataclasses import dataclass
from pathlib import Path

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import RunConfig, default_run_config
from errors import ConfigError, InvalidSpec
from analysis.decimation import CicConfig, FirConfig
from analysis.filter_design import design_fir
from readout.modulator import ModulatorConfig
from readout.mux import MuxSchedule
from sensor.membrane import MaterialParams, MembraneGeometry
from sensor.scene import ArrayLayout, ArterialWaveformSpec, PressureScene, build_scene


def _build(section: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidSpec as e:
        raise ConfigError(str(e), section) from e


def geometry_from(cfg: RunConfig) -> MembraneGeometry:
    m = cfg["membrane"]
    return _build("membrane", MembraneGeometry, side_length=m["side_length"],
                  thickness=m["thickness"], gap0=m["gap0"],
                  electrode_coverage=m["electrode_coverage"])


def material_from(cfg: RunConfig) -> MaterialParams:
    m = cfg["membrane"]
    return _build("membrane", MaterialParams, youngs_modulus=m["youngs_modulus"],
                  poisson_ratio=m["poisson_ratio"])


def waveform_spec_from(cfg: RunConfig) -> ArterialWaveformSpec:
    s = cfg["scene"]
    return _build("scene", ArterialWaveformSpec, heart_rate=s["heart_rate"],
                  systolic=s["systolic"], diastolic=s["diastolic"], duration=s["duration"],
                  sample_rate=s["sample_rate"], morphology_seed=s["morphology_seed"])


def layout_from(cfg: RunConfig) -> ArrayLayout:
    s = cfg["scene"]
    return _build("scene", ArrayLayout, rows=s["rows"], cols=s["cols"], pitch=s["pitch"],
                  membrane_side=cfg["membrane"]["side_length"])


def scene_from(cfg: RunConfig, spec: ArterialWaveformSpec = None) -> PressureScene:
    s = cfg["scene"]
    if len(s["vessel_position"]) != 2:
        raise ConfigError("needs exactly two coordinates", "scene.vessel_position")
    spec = spec or waveform_spec_from(cfg)
    try:
        return build_scene(
            spec, vessel_position=tuple(s["vessel_position"]),
            coupling_width=s["coupling_width"], contact_bias=s["contact_bias"],
            backpressure=s["backpressure"],
        )
    except InvalidSpec as e:
        raise ConfigError(str(e), "scene") from e


def modulator_from(cfg: RunConfig, input_mode: str = None) -> ModulatorConfig:
    m = dict(cfg["modulator"])
    if input_mode:
        m["input_mode"] = input_mode
    return _build("modulator", ModulatorConfig, seed=cfg["run"]["seed"], **m)


def schedule_from(cfg: RunConfig) -> MuxSchedule:
    m = cfg["mux"]
    return _build("mux", MuxSchedule, element_order=m["element_order"], dwell=m["dwell"],
                  blanking=m["blanking"])


def cic_from(cfg: RunConfig) -> CicConfig:
    d = cfg["decimation"]
    return _build("decimation", CicConfig, order=d["cic_order"], rate_change=d["cic_rate"],
                  differential_delay=d["differential_delay"])


def fir_from(cfg: RunConfig, cic: CicConfig = None, check: bool = True) -> FirConfig:
    """Design the FIR for the configured CIC and rates."""
    d = cfg["decimation"]
    cic = cic or cic_from(cfg)
    sample_rate = cfg["modulator"]["sample_rate"]
    if sample_rate % (cic.rate_change * d["fir_rate"]):
        raise ConfigError("must be a multiple of cic_rate * fir_rate", "modulator.sample_rate")
    try:
        return design_fir(
            cic, n_taps=d["fir_taps"], rate_change=d["fir_rate"], cutoff=d["cutoff"],
            sample_rate=sample_rate, passband_edge=d["passband_edge"],
            ripple_db=d["passband_ripple_db"], image_rejection_db=d["image_rejection_db"],
            image_halfwidth=d["image_halfwidth"], output_bits=d["output_bits"],
            accumulator_bits=d["accumulator_bits"], check=check,
        )
    except InvalidSpec as e:
        raise ConfigError(str(e), "decimation") from e


@dataclass(frozen=True)
class Chain:
    """Everything a measurement needs, built once from a RunConfig."""
    geometry: MembraneGeometry
    material: MaterialParams
    spec: ArterialWaveformSpec
    scene: PressureScene
    layout: ArrayLayout
    modulator: ModulatorConfig
    schedule: MuxSchedule
    cic: CicConfig
    fir: FirConfig
    contact_fraction: float
    quadrature_points: int


def chain_from(cfg: RunConfig = None) -> Chain:
    cfg = cfg or default_run_config()
    spec = waveform_spec_from(cfg)
    cic = cic_from(cfg)
    return Chain(
        geometry=geometry_from(cfg),
        material=material_from(cfg),
        spec=spec,
        scene=scene_from(cfg, spec),
        layout=layout_from(cfg),
        modulator=modulator_from(cfg),
        schedule=schedule_from(cfg),
        cic=cic,
        fir=fir_from(cfg, cic),
        contact_fraction=cfg["membrane"]["contact_fraction"],
        quadrature_points=cfg["membrane"]["quadrature_points"],
    )
