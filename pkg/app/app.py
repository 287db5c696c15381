from flask import Flask, request, jsonify
from flask_compress import Compress
from dotenv import load_dotenv
from app.api_logic import process_request
from app.cases import case_names, get_case
from app.cases.common import default_config_path
from app.core.config import parse_config
from app.core.errors import LbError
import os

load_dotenv()

app = Flask(__name__)
Compress(app)

@app.route('/', methods=['GET'])
def health_check():
    return jsonify({"status": "healthy", "service": "lbkit benchmarks", "cases": case_names()}), 200

@app.route('/api/cases', methods=['GET'])
def list_cases():
    cases = []
    for name in case_names():
        entry = get_case(name)
        cases.append({
            "name": name,
            "eoc": entry.supports_eoc,
            "optimization": entry.optimization,
        })
    return jsonify({"status": "success", "cases": cases}), 200

@app.route('/api/cases/<name>', methods=['GET'])
def case_defaults(name):
    if name not in case_names():
        return jsonify({"status": "error", "error_type": "validation",
                        "message": f"Unknown case {name}. Available: {case_names()}"}), 404
    try:
        defaults = parse_config(default_config_path(name)).as_dict()
    except LbError as e:
        return jsonify({"status": "error", "error_type": "validation", "message": str(e)}), 500
    return jsonify({"status": "success", "case": name, "defaults": defaults}), 200

@app.route('/api/cases/<name>', methods=['POST'])
def run_case(name):
    try:
        data = request.get_json(force=True, silent=True)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            return jsonify({"status": "error", "error_type": "validation",
                            "message": "JSON payload must be an object"}), 400

        result = process_request(name, data)

        # blowup and optimizer errors are 400 as well
        status_code = 200
        if result.get("status") == "error":
            status_code = 400

        return jsonify(result), status_code

    except Exception as e:
        return jsonify({"status": "error", "error_type": "internal", "message": str(e)}), 500

if __name__ == '__main__':
    port = int(os.environ.get('PORT', 5000))
    app.run(host='0.0.0.0', port=port)
