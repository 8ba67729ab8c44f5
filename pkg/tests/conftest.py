import pytest

from cdasr.synth import CorpusSpec, generate


@pytest.fixture(scope="session")
def default_corpus(tmp_path_factory):
    """The fixed-seed experiment corpus: 10 files x 120 s, 20% silence."""
    root = tmp_path_factory.mktemp("default_corpus")
    manifest = generate(CorpusSpec(), root)
    return root, manifest


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A 2-file corpus for fast CLI and pipeline tests."""
    root = tmp_path_factory.mktemp("small_corpus")
    spec = CorpusSpec(n_files=2, duration_s=60.0, silence_fraction=0.25, seed=11)
    manifest = generate(spec, root)
    return root, manifest
