from __future__ import annotations

import numpy as np
import pytest

from accelstate.features import LabeledDataset
from accelstate.pipeline import AnimalRecording, cohort_dataset
from accelstate.synth import SynthProfile, generate_cohort


def cohort_recordings(profile: SynthProfile) -> list[AnimalRecording]:
    return [AnimalRecording(a.series, a.events, {}) for a in generate_cohort(profile).animals]


@pytest.fixture(scope="session")
def small_profile() -> SynthProfile:
    return SynthProfile(n_animals=4, day_length_s=600.0, seed=11)


@pytest.fixture(scope="session")
def small_dataset(small_profile) -> LabeledDataset:
    return cohort_dataset(cohort_recordings(small_profile), 9)


@pytest.fixture(scope="session")
def default_cohort_recordings() -> list[AnimalRecording]:
    return cohort_recordings(SynthProfile(seed=0))


@pytest.fixture(scope="session")
def default_dataset(default_cohort_recordings) -> LabeledDataset:
    return cohort_dataset(default_cohort_recordings, 9)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
