import numpy as np
import pytest

from tomobench.sampler import SimulationPlan, simulate_dataset
from tomobench.states import StateSpec

COHERENT = StateSpec.coherent(0.64)
DETECTED_SPACS = StateSpec.detected_spacs(0.83, 0.6)


@pytest.fixture(scope="session")
def coherent_data():
    return simulate_dataset(SimulationPlan(COHERENT, seed=0))


@pytest.fixture(scope="session")
def spacs_data():
    return simulate_dataset(SimulationPlan(DETECTED_SPACS, seed=0))


@pytest.fixture(scope="session")
def vacuum_data():
    return simulate_dataset(SimulationPlan(StateSpec.coherent(0.0), seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SEEDS = range(20)


def evaluate_run(dataset):
    """Every check of one dataset, keyed by name, plus the intermediate estimates."""
    from tomobench.functionals import dataset_histograms, purity
    from tomobench.inequalities import (
        heisenberg_check,
        moment_pair,
        purity_heisenberg_check,
        renyi_check,
        renyi_summary_check,
        shannon_pair_check,
        shannon_phase_averaged,
    )

    hbar = dataset.hbar
    pr = purity(dataset_histograms(dataset), hbar)
    m = moment_pair(dataset)
    curve = renyi_check(dataset, hbar=hbar)
    return {
        "purity": pr,
        "moments": m,
        "renyi": curve,
        "heisenberg": heisenberg_check(m, hbar),
        "purity_heisenberg": purity_heisenberg_check(m, pr, hbar),
        "shannon_pair": shannon_pair_check(dataset, 0.0, hbar),
        "shannon_phase_averaged": shannon_phase_averaged(dataset, hbar),
        "renyi_summary": renyi_summary_check(curve),
    }


@pytest.fixture(scope="session")
def seed_runs():
    """Coherent and detected-SPACS analyses over 20 seeds at 5321 samples per phase."""
    from tomobench.inequalities import state_extended_check

    runs = []
    for seed in SEEDS:
        coh = evaluate_run(simulate_dataset(SimulationPlan(COHERENT, seed=seed)))
        spacs = evaluate_run(simulate_dataset(SimulationPlan(DETECTED_SPACS, seed=seed)))
        extended = state_extended_check(coh["moments"], spacs["moments"], COHERENT.hbar)
        runs.append({"coherent": coh, "spacs": spacs, "state_extended": extended})
    return runs


_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Record and print the outcome of one acceptance criterion, then assert it."""

    def report(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
