import random
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from spatialcov.fixtures import synthetic_labels, synthetic_manifest  # noqa: E402
from spatialcov.labels import LabelMatrix, Provenance, build_matrix  # noqa: E402
from spatialcov.simdist import scene_similarity_matrix  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_label_matrix(rng: random.Random, n_scenes, n_langs, vocab=3) -> LabelMatrix:
    langs = tuple(f"l{k}" for k in range(n_langs))
    scenes = tuple(f"s{k:02d}" for k in range(n_scenes))
    cells = tuple(tuple(f"t{rng.randrange(vocab)}" for _ in scenes) for _ in langs)
    return LabelMatrix(langs, scenes, cells, Provenance.LLM)


@pytest.fixture
def rng():
    return random.Random(20260101)


@pytest.fixture(scope="session")
def synthetic_220():
    manifest = synthetic_manifest()
    table = synthetic_labels(manifest, seed=3)
    matrix = build_matrix(table, manifest, "REQUIRE_SINGLE", provenance="LLM")
    return manifest, table, matrix


@pytest.fixture(scope="session")
def synthetic_sim(synthetic_220):
    return scene_similarity_matrix(synthetic_220[2])


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
