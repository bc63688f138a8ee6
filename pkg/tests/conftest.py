import json

import pytest

from swapsim.profiles import CostModel, parse_cost_model


def cost_model_doc(models: list[dict]) -> dict:
    return {"models": models}


def model_entry(
    name: str,
    curve: list[list],
    load_cc: float,
    load_nocc: float,
    std_cc: float = 0.0,
    std_nocc: float = 0.0,
    unload: float = 0.01,
    unload_std: float = 0.0,
    size_gb: float = 10.0,
) -> dict:
    return {
        "name": name,
        "size_gb": size_gb,
        "curve": curve,
        "cc": {
            "load_mean_s": load_cc,
            "load_std_s": std_cc,
            "unload_mean_s": unload,
            "unload_std_s": unload_std,
        },
        "nocc": {
            "load_mean_s": load_nocc,
            "load_std_s": std_nocc,
            "unload_mean_s": unload,
            "unload_std_s": unload_std,
        },
    }


def build_cost_model(models: list[dict]) -> CostModel:
    return parse_cost_model(cost_model_doc(models))


@pytest.fixture
def oracle_cost_model() -> CostModel:
    """Two models, OBS 2, proc(1)=4s proc(2)=6s, load 10s (std 0), unload 10ms."""
    return build_cost_model(
        [
            model_entry("modela", [[1, 4.0], [2, 6.0]], load_cc=12.0, load_nocc=10.0),
            model_entry("modelb", [[1, 4.0], [2, 6.0]], load_cc=12.0, load_nocc=10.0),
        ]
    )


@pytest.fixture
def oracle_config_doc(tmp_path) -> dict:
    """Run config JSON for the hand-computed scenario, trace supplied separately."""
    cm_path = tmp_path / "oracle_cm.json"
    cm_path.write_text(
        json.dumps(
            cost_model_doc(
                [
                    model_entry("modela", [[1, 4.0], [2, 6.0]], 12.0, 10.0),
                    model_entry("modelb", [[1, 4.0], [2, 6.0]], 12.0, 10.0),
                ]
            )
        )
    )
    trace_path = tmp_path / "oracle_trace.csv"
    trace_path.write_text(
        "arrival_s,model\n"
        "0.000000,modela\n"
        "5.000000,modela\n"
        "6.000000,modelb\n"
        "7.000000,modelb\n"
    )
    return {
        "cost_model": str(cm_path),
        "strategy": "best_batch",
        "trace": str(trace_path),
        "sla_s": 40,
        "mode": "nocc",
        "run_length_s": 30,
        "seed": 7,
    }
