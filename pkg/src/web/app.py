"""
Flask artifact browser for ClipForge runs
"""

import os
from pathlib import Path
from typing import Optional

from flask import Flask, jsonify, request
from flask_cors import CORS

from ..longvideo.windows import WeightFunction, eval_weights, plan_windows
from ..metrics.report import MetricReport
from ..models.errors import ClipForgeError


def create_app(out_dir: Optional[str] = None):
    """Create Flask application serving the runs under ``out_dir``"""
    app = Flask(__name__)
    root = Path(out_dir or os.environ.get('CLIPFORGE_OUT_DIR', 'runs'))
    app.config['RUNS_ROOT'] = str(root)

    # Enable CORS
    CORS(app)

    def list_runs():
        if not root.is_dir():
            return []
        return sorted(p.name for p in root.iterdir() if p.is_dir())

    def run_file(run, name):
        if run not in list_runs():
            return None
        path = root / run / name
        return path if path.is_file() else None

    @app.route('/api/runs')
    def get_runs():
        """List run directories"""
        return jsonify({
            'success': True,
            'runs': list_runs()
        })

    @app.route('/api/runs/<run>/metrics')
    def get_metrics(run):
        """Metric report of a run"""
        path = run_file(run, 'metrics.txt')
        if path is None:
            return jsonify({
                'success': False,
                'error': f'No metrics found for run: {run}'
            }), 404
        try:
            report = MetricReport.from_text(path.read_text(encoding='utf-8'))
            return jsonify({
                'success': True,
                'metrics': report.to_dict()
            })
        except (TypeError, ValueError) as e:
            return jsonify({
                'success': False,
                'error': f'Unreadable metrics: {e}'
            }), 500

    @app.route('/api/runs/<run>/loss')
    def get_loss(run):
        """Loss trace of a training run"""
        path = run_file(run, 'loss.txt')
        if path is None:
            return jsonify({
                'success': False,
                'error': f'No loss trace found for run: {run}'
            }), 404
        rows = path.read_text(encoding='utf-8').splitlines()[1:]
        trace = []
        for row in rows:
            iteration, loss = row.split()
            trace.append({'iteration': int(iteration), 'loss': float(loss)})
        return jsonify({
            'success': True,
            'trace': trace
        })

    @app.route('/api/plan')
    def get_plan():
        """Window plan for N frames, window L and overlap a"""
        try:
            plan = plan_windows(
                request.args.get('N', type=int),
                request.args.get('L', default=16, type=int),
                request.args.get('a', default=8, type=int),
            )
            return jsonify({
                'success': True,
                'plan': plan.to_dict()
            })
        except (ClipForgeError, TypeError, ValueError) as e:
            return jsonify({
                'success': False,
                'error': str(e)
            }), 400

    @app.route('/api/weights')
    def get_weights():
        """Window weight profile"""
        try:
            f = WeightFunction(
                request.args.get('kind', default='gaussian'),
                request.args.get('sigma', default=0.1, type=float),
            )
            weights = eval_weights(f, request.args.get('length', default=16, type=int))
            return jsonify({
                'success': True,
                'weights': [float(w) for w in weights]
            })
        except (ClipForgeError, ValueError) as e:
            return jsonify({
                'success': False,
                'error': str(e)
            }), 400

    @app.route('/health')
    def health_check():
        """Health check endpoint"""
        return jsonify({
            'status': 'healthy',
            'components': {
                'runs_root': 'ok' if root.is_dir() else 'missing',
                'runs': len(list_runs())
            }
        })

    return app


if __name__ == '__main__':
    app = create_app()
    app.run(host='127.0.0.1', port=5000, debug=False)
