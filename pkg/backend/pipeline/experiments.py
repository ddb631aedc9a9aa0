"""
Experiments Module
The reproducible jobs behind the CLI and the API: converter test, FIR
design, array scan and the full blood-pressure measurement.

Every job takes a RunConfig, returns a flat metrics dict and, when given
an output directory, writes its CSVs stamped with the config hash.
"""
import sys
from pathlib import Path
from typing import Dict

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import RunConfig, config_hash, default_run_config
from errors import ConfigError
from analysis.decimation import decimate_chain, decimate_scan, group_delay, transient_cut
from analysis.filter_design import design_report, response_frame
from analysis.spectrum import noise_shaping_slope, signal_bin_of, snr_sndr, spectrum
from data.exports import (
    save_bitstream, save_decimated_csv, save_metrics, save_spectrum_csv, save_taps,
    save_waveform_csv, write_csv,
)
from pipeline.builders import chain_from, cic_from, fir_from, modulator_from
from pipeline.measurement import element_p2p, measure, select_strongest, waveform_correlation
from readout.modulator import run_modulator, sine_input
from readout.mux import scan


def _banner(title: str):
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}\n")


def _output_dir(cfg: RunConfig, out_dir) -> Path:
    return Path(out_dir or cfg["run"]["output_dir"])


def cmd_adc_test(cfg: RunConfig = None, amplitude_fraction: float = None, freq_hz: float = None,
                 out_dir=None, write: bool = True, verbose: bool = True) -> Dict:
    """
    Voltage-mode sine through modulator, decimation and spectral analysis.

    Defaults to 0.91 FS at 15.625 Hz with an 8192-point FFT.
    """
    cfg = cfg or default_run_config()
    a = cfg["analysis"]
    amplitude = a["amplitude_fraction"] if amplitude_fraction is None else amplitude_fraction
    freq = a["test_frequency"] if freq_hz is None else freq_hz
    if not 0 < amplitude < 1:
        raise ConfigError(f"{amplitude} is outside (0, 1)", "analysis.amplitude_fraction")
    if freq <= 0:
        raise ConfigError("must be positive", "analysis.test_frequency")

    modulator = modulator_from(cfg, input_mode="voltage")
    cic = cic_from(cfg)
    fir = fir_from(cfg, cic)
    rate = modulator.sample_rate / (cic.rate_change * fir.rate_change)
    if freq >= rate / 2:
        raise ConfigError(f"{freq} Hz is above the output Nyquist", "analysis.test_frequency")

    fft_length = a["fft_length"]
    outputs = fft_length + transient_cut(cic, fir) + a["settle_samples"]
    n_bits = outputs * cic.rate_change * fir.rate_change

    if verbose:
        _banner(f"ADC test - {amplitude:.0%} FS at {freq:g} Hz, {fft_length}-point FFT")
        print(f"Step 1: Modulating {n_bits} samples at {modulator.sample_rate} Hz...")
    bits = run_modulator(sine_input(amplitude, freq, n_bits, modulator), modulator)

    if verbose:
        print("Step 2: Decimating...")
    stream = decimate_chain(bits, cic, fir)

    if verbose:
        print("Step 3: Spectral analysis...")
    spec = spectrum(stream, fft_length, a["window"], sample_rate=rate)
    signal_bin = signal_bin_of(freq, rate, fft_length)
    metrics = snr_sndr(spec, signal_bin, a["harmonic_count"], a["skirt_bins"])

    result = metrics.to_dict()
    result.update({
        "amplitude_fraction": amplitude,
        "output_rate_hz": rate,
        "saturations": stream.saturations,
        "noise_shaping_db_per_decade": noise_shaping_slope(bits, modulator.sample_rate),
        "group_delay_samples": group_delay(cic, fir)[1],
    })

    if verbose:
        coherent = abs(freq * fft_length / rate - signal_bin) < 1e-9
        if not coherent and a["window"] == "rectangular":
            print(f"  ⚠ {freq} Hz is not on an FFT bin; expect leakage")
        print(f"  ✓ SNDR {metrics.sndr_db:.2f} dB, SNR {metrics.snr_db:.2f} dB, "
              f"ENOB {metrics.enob:.2f} bits")

    if write:
        out = _output_dir(cfg, out_dir)
        digest = config_hash(cfg)
        save_spectrum_csv(out / "adc_spectrum.csv", spec, digest)
        save_metrics(out / "adc_metrics", result, digest)
        if verbose:
            print(f"  ✓ Written to {out}")
    return result


def cmd_filter_design(cfg: RunConfig = None, out_dir=None, write: bool = True,
                      verbose: bool = True) -> Dict:
    """Design the FIR and export its taps and composite response."""
    cfg = cfg or default_run_config()
    cic = cic_from(cfg)
    if verbose:
        _banner(f"FIR design - {cfg['decimation']['fir_taps']} taps, "
                f"cutoff {cfg['decimation']['cutoff']:g} Hz")
    fir = fir_from(cfg, cic)
    sample_rate = cfg["modulator"]["sample_rate"]
    report = design_report(fir, cic, sample_rate, cfg["decimation"]["passband_edge"],
                           cfg["decimation"]["image_halfwidth"])
    report["taps"] = list(fir.taps)

    if verbose:
        print(f"  ✓ ripple {report['ripple_db']:.3f} dB, "
              f"{report['cutoff_gain_db']:.2f} dB at cutoff, "
              f"image rejection {report['image_rejection_db']:.1f} dB")

    if write:
        out = _output_dir(cfg, out_dir)
        digest = config_hash(cfg)
        save_taps(out / "fir_taps.txt", fir.taps, digest)
        write_csv(response_frame(fir, cic, sample_rate), out / "filter_response.csv", digest)
        save_metrics(out / "filter_metrics",
                     {k: v for k, v in report.items() if k != "taps"}, digest)
    return report


def cmd_scan(cfg: RunConfig = None, out_dir=None, write: bool = True, verbose: bool = True) -> Dict:
    """Round-robin scan; one DecimatedStream CSV per element plus the raw bits."""
    cfg = cfg or default_run_config()
    chain = chain_from(cfg)
    p = cfg["pipeline"]
    if verbose:
        _banner(f"Array scan - {chain.layout.n_elements} elements, "
                f"dwell {chain.schedule.dwell}, blanking {chain.schedule.blanking}")
        print("Step 1: Acquiring...")
    acquisition = scan(
        chain.scene, chain.layout, chain.schedule, chain.modulator, chain.scene.duration,
        chain.geometry, chain.material, chain.contact_fraction, chain.quadrature_points,
    )
    if verbose:
        print("Step 2: Decimating per element...")
    streams = decimate_scan(acquisition, chain.cic, chain.fir)
    scores = element_p2p(streams, p["min_valid_seconds"], p["percentile_low"], p["percentile_high"])
    selected = select_strongest(streams, p["min_valid_seconds"], p["percentile_low"],
                                p["percentile_high"])

    result = {"selected_element": selected, "bits": len(acquisition.bits)}
    for element, stream in streams.items():
        result[f"valid_samples_element_{element}"] = int(stream.valid.sum())
    for element, p2p in scores.items():
        result[f"p2p_element_{element}"] = p2p
        if verbose:
            marker = "✓" if element == selected else " "
            print(f"  {marker} element {element}: p2p = {p2p:.1f} codes")

    if write:
        out = _output_dir(cfg, out_dir)
        digest = config_hash(cfg)
        for element, stream in streams.items():
            save_decimated_csv(out / f"scan_element_{element}.csv", stream, digest)
        save_bitstream(out / "scan_bitstream.sdm", acquisition.bits)
        save_metrics(out / "scan_metrics", result, digest)
    return result


def cmd_measure(cfg: RunConfig = None, out_dir=None, write: bool = True,
                verbose: bool = True) -> Dict:
    """End-to-end measurement with two-point cuff calibration."""
    cfg = cfg or default_run_config()
    chain = chain_from(cfg)
    p = cfg["pipeline"]
    report = measure(chain, (p["cuff_systolic"], p["cuff_diastolic"]), p, verbose=verbose)

    result = report.metrics()
    result["correlation"] = waveform_correlation(report, chain.scene)
    if verbose:
        print(f"  ✓ correlation with ground truth {result['correlation']:.4f}")

    if write:
        out = _output_dir(cfg, out_dir)
        digest = config_hash(cfg)
        save_waveform_csv(out / "waveform.csv", report.times, report.waveform_mmhg, digest)
        save_metrics(out / "measurement", result, digest)
        if verbose:
            print(f"  ✓ Written to {out}")
    return result
