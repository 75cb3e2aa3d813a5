import pytest

from src.models.cost import CostModel
from src.models.dag import AppDag
from src.models.job import Job

# H == p_public exactly, so savings are whole numbers
UNIT_COST = CostModel(granularity_ms=1.0, rate_usd_per_gb_ms=1.0, reference_memory_mb=1024.0)


def make_job(job_id, private, public=None, upload=None, download=None, must_private=(), features=()):
    count = len(private)
    return Job(
        id=job_id,
        p_private=private,
        p_public=public if public is not None else [p / 2 for p in private],
        upload_ms=upload if upload is not None else [0.0] * count,
        download_ms=download if download is not None else [0.0] * count,
        must_private=must_private,
        features=features,
    )


@pytest.fixture
def single_stage():
    return AppDag(("work",), (), (1,), (1024.0,))


@pytest.fixture
def chain2():
    return AppDag.chain(["a", "b"], [1, 1], [1024.0, 1024.0])


@pytest.fixture
def chain3():
    return AppDag.chain(["a", "b", "c"], [1, 1, 1], [1024.0, 1024.0, 1024.0])


@pytest.fixture
def diamond():
    return AppDag(("a", "b", "c", "d"), ((0, 1), (0, 2), (1, 3), (2, 3)), (1, 1, 1, 1), (1024.0,) * 4)
