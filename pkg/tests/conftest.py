import pytest

from traitrec.evaluate import SyntheticSpec, SyntheticRun, run_synthetic_pipeline

CANONICAL_SPEC = SyntheticSpec(
    seed=7,
    n_users_per_trait=4,
    vocab_per_trait=30,
    shared_vocab=10,
    msgs_per_user=200,
    noise_rate=0.2,
)


@pytest.fixture(scope="session")
def canonical_run() -> SyntheticRun:
    """The seed-7 synthetic corpus run through the whole pipeline once."""
    return run_synthetic_pipeline(CANONICAL_SPEC)
