from pathlib import Path

import pytest

from pipetwin.parser import Provenance, RawConfig, parse

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def reference_bytes() -> bytes:
    return (FIXTURES / "reference.yml").read_bytes()


@pytest.fixture(scope="session")
def reference_pipeline(reference_bytes):
    return parse(
        RawConfig(
            raw_bytes=reference_bytes,
            provenance=Provenance(ref="main", commit_sha="a" * 40, file_path=".gitlab-ci.yml"),
        )
    )


@pytest.fixture(scope="session")
def inkscape_v1_bytes() -> bytes:
    return (FIXTURES / "inkscape_v1.yml").read_bytes()


@pytest.fixture(scope="session")
def inkscape_v2_bytes() -> bytes:
    return (FIXTURES / "inkscape_v2.yml").read_bytes()


@pytest.fixture(scope="session")
def inkscape_v1(inkscape_v1_bytes):
    return parse(
        RawConfig(
            raw_bytes=inkscape_v1_bytes,
            provenance=Provenance(ref="master", commit_sha="b" * 40, file_path=".gitlab-ci.yml"),
        )
    )


@pytest.fixture(scope="session")
def inkscape_v2(inkscape_v2_bytes):
    return parse(
        RawConfig(
            raw_bytes=inkscape_v2_bytes,
            provenance=Provenance(ref="master", commit_sha="c" * 40, file_path=".gitlab-ci.yml"),
        )
    )
