from datetime import datetime
from typing import Any, Dict, List, Optional

# Imports from Case Modules
from app.cases import case_names, get_case, run_case, run_eoc, run_optimization
from app.cases.common import load_case_config
from app.core.errors import LbError, NumericalBlowupError, OptimizerError, ValidationError
from app.core.ostream import get_logger

logger = get_logger("api")

ACTIONS = ("run", "eoc", "optimize")


def _error(message: str, kind: str) -> Dict[str, Any]:
    return {"status": "error", "error_type": kind, "message": message}


def _overrides(payload: Dict[str, Any]) -> Dict[str, Any]:
    """
    Flattens the optional "config" object into dotted keys.
    Nested objects become sections: {"Output": {"SaveTime": 1}} -> Output.SaveTime
    """
    flat: Dict[str, Any] = {}

    def walk(prefix: str, value: Any) -> None:
        if isinstance(value, dict):
            for key, inner in value.items():
                walk(f"{prefix}.{key}" if prefix else str(key), inner)
        elif isinstance(value, (list, tuple)):
            flat[prefix] = ", ".join(str(v) for v in value)
        else:
            flat[prefix] = value

    config = payload.get("config") or {}
    if not isinstance(config, dict):
        raise ValidationError("'config' must be an object of parameters")
    walk("", config)
    return flat


def _resolutions(payload: Dict[str, Any]) -> Optional[List[int]]:
    values = payload.get("resolutions")
    if values is None:
        return None
    try:
        return [int(v) for v in values]
    except (TypeError, ValueError):
        raise ValidationError("'resolutions' must be a list of integers") from None


def process_request(case: str, request_json: Dict[str, Any]) -> Dict[str, Any]:
    """
    Runs a benchmark case for the HTTP surface.

    Payload keys (all optional):
        action       run | eoc | optimize (default run, optimize for optimization cases)
        config       parameter overrides, nested by section
        resolutions  list of resolutions for action eoc
        output       output directory
    """
    if case not in case_names():
        return _error(f"Unknown case {case}. Available: {case_names()}", "validation")

    entry = get_case(case)
    action = request_json.get("action", "optimize" if entry.optimization else "run")
    if action not in ACTIONS:
        return _error(f"Unknown action {action}. Available: {list(ACTIONS)}", "validation")

    started = datetime.now()
    try:
        config = load_case_config(case, output_dir=request_json.get("output"),
                                  overrides=_overrides(request_json))
        if action == "eoc":
            report = run_eoc(case, config, _resolutions(request_json))
        elif action == "optimize":
            report = run_optimization(case, config)
        else:
            report = run_case(case, config)
    except NumericalBlowupError as exc:
        return _error(str(exc), "blowup")
    except OptimizerError as exc:
        return _error(str(exc), "optimizer")
    except LbError as exc:
        return _error(str(exc), "validation")

    logger.info(f"{action} {case} finished in {(datetime.now() - started).total_seconds():.2f}s")
    return {
        "status": "success",
        "case": case,
        "action": action,
        "generated_at": started.isoformat(timespec="seconds"),
        "report": report.to_dict(),
    }
