"""
Flask REST API for the Blood-Pressure Simulator
Runs the converter test, FIR design and full measurement on request.
"""
from flask import Flask, jsonify, request
from flask_cors import CORS
from datetime import datetime
import json
import sys
from pathlib import Path

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import (
    API_HOST, API_PORT, API_DEBUG, default_run_config, emit_run_config, parse_run_config,
)
from errors import CalibrationError, ConfigError, SimError
from analysis.spectrum import metrics_json
from pipeline.experiments import cmd_adc_test, cmd_filter_design, cmd_measure


app = Flask(__name__)
CORS(app)  # browser clients on other origins


def _payload(metrics: dict) -> dict:
    """Plain-JSON copy of a metrics dict (numpy scalars included)."""
    return json.loads(metrics_json(metrics))


def _error(e: Exception):
    if isinstance(e, ConfigError):
        return jsonify({'error': str(e), 'kind': 'config'}), 400
    if isinstance(e, CalibrationError):
        return jsonify({'error': str(e), 'kind': 'calibration'}), 422
    if isinstance(e, SimError):
        return jsonify({'error': str(e), 'kind': 'simulation'}), 422
    return jsonify({'error': str(e)}), 500


@app.route('/api/health', methods=['GET'])
def health_check():
    """Health check endpoint."""
    return jsonify({
        'status': 'healthy',
        'timestamp': datetime.now().isoformat(),
        'version': '1.0.0'
    })


@app.route('/api/adc-test', methods=['GET'])
def adc_test():
    """
    Converter test with the default chain.

    Query params:
    - amplitude: fraction of full scale (default: 0.91)
    - freq: tone frequency in Hz (default: 15.625)
    """
    try:
        amplitude = request.args.get('amplitude', None, type=float)
        freq = request.args.get('freq', None, type=float)
        metrics = cmd_adc_test(default_run_config(), amplitude, freq, write=False, verbose=False)
        return jsonify({
            'timestamp': datetime.now().isoformat(),
            'metrics': _payload(metrics)
        })
    except Exception as e:
        return _error(e)


@app.route('/api/filter-design', methods=['GET'])
def filter_design():
    """Designed taps and the figures they are judged on."""
    try:
        report = cmd_filter_design(default_run_config(), write=False, verbose=False)
        return jsonify(_payload(report))
    except Exception as e:
        return _error(e)


@app.route('/api/measure', methods=['POST'])
def run_measure():
    """
    Full measurement. The optional request body is RunConfig text applied
    on top of the defaults.
    """
    try:
        text = request.get_data(as_text=True) or ''
        cfg = parse_run_config(text) if text.strip() else default_run_config()
        metrics = cmd_measure(cfg, write=False, verbose=False)
        return jsonify({
            'timestamp': datetime.now().isoformat(),
            'metrics': _payload(metrics)
        })
    except Exception as e:
        return _error(e)


@app.route('/api/config/default', methods=['GET'])
def default_config():
    """Default configuration as canonical text."""
    return app.response_class(emit_run_config(default_run_config()), mimetype='text/plain')


if __name__ == '__main__':
    print(f"\n{'='*50}")
    print("Blood-Pressure Simulator API")
    print(f"Running on http://{API_HOST}:{API_PORT}")
    print(f"{'='*50}\n")

    app.run(host=API_HOST, port=API_PORT, debug=API_DEBUG)
