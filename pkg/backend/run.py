"""
Tactile Blood-Pressure Simulator - Main Entry Point

Usage:
    python run.py adc-test                      # Converter spectrum + SNDR
    python run.py adc-test --amplitude 0.5      # Same tone at half scale
    python run.py filter-design                 # FIR taps + composite response
    python run.py scan                          # Per-element raw dump
    python run.py measure                       # Full calibrated measurement
    python run.py write-config > my.conf        # Default config as text
    python run.py serve                         # Start API server

Global flags (before the command): --config <path> --seed <int> --out <dir>

Exit codes: 0 ok, 2 configuration, 3 simulation, 4 calibration.
"""
import argparse
import sys
from pathlib import Path

# Ensure proper imports
sys.path.insert(0, str(Path(__file__).parent))

from config import default_run_config, emit_run_config, load_run_config
from errors import CalibrationError, ConfigError, SimError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_CALIBRATION = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Tactile Blood-Pressure Simulator')
    parser.add_argument('--config', help='Sectioned key=value run configuration')
    parser.add_argument('--seed', type=int, help='Override run.seed')
    parser.add_argument('--out', help='Override run.output_dir')
    parser.add_argument('--quiet', action='store_true', help='Suppress progress output')

    commands = parser.add_subparsers(dest='command', required=True)

    adc = commands.add_parser('adc-test', help='Voltage-mode sine converter test')
    adc.add_argument('--amplitude', type=float, help='Fraction of full scale (0, 1)')
    adc.add_argument('--freq', type=float, help='Tone frequency in Hz')

    commands.add_parser('measure', help='Scan, select, calibrate and export a pressure wave')
    commands.add_parser('filter-design', help='Design the FIR and export taps + response')
    commands.add_parser('scan', help='Round-robin scan with per-element output')
    commands.add_parser('write-config', help='Print the effective configuration')
    commands.add_parser('serve', help='Start the HTTP API')
    return parser


def resolve_config(args):
    cfg = load_run_config(args.config) if args.config else default_run_config()
    if args.seed is not None:
        cfg['run']['seed'] = args.seed
    if args.out is not None:
        cfg['run']['output_dir'] = args.out
    return cfg


def serve():
    from api.app import app
    from config import API_HOST, API_PORT, API_DEBUG

    print(f"\nStarting Blood-Pressure Simulator API...")
    print(f"Server: http://{API_HOST}:{API_PORT}")
    print(f"Endpoints:")
    print(f"  GET  /api/health          - Health check")
    print(f"  GET  /api/adc-test        - Converter test (amplitude, freq)")
    print(f"  GET  /api/filter-design   - FIR taps and design figures")
    print(f"  POST /api/measure         - Full measurement (body: config text)")
    print(f"  GET  /api/config/default  - Default configuration text")
    print()

    app.run(host=API_HOST, port=API_PORT, debug=API_DEBUG)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    verbose = not args.quiet

    try:
        cfg = resolve_config(args)

        if args.command == 'write-config':
            sys.stdout.write(emit_run_config(cfg))
            return EXIT_OK

        if args.command == 'serve':
            serve()
            return EXIT_OK

        from pipeline.experiments import cmd_adc_test, cmd_filter_design, cmd_measure, cmd_scan

        if args.command == 'adc-test':
            cmd_adc_test(cfg, args.amplitude, args.freq, verbose=verbose)
        elif args.command == 'filter-design':
            cmd_filter_design(cfg, verbose=verbose)
        elif args.command == 'scan':
            cmd_scan(cfg, verbose=verbose)
        elif args.command == 'measure':
            cmd_measure(cfg, verbose=verbose)
        return EXIT_OK

    except ConfigError as e:
        print(f"✗ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as e:
        print(f"✗ Calibration failed: {e}", file=sys.stderr)
        return EXIT_CALIBRATION
    except SimError as e:
        print(f"✗ Simulation failed: {e}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == '__main__':
    sys.exit(main())
