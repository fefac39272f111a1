"""Shared corpus fixtures; certificates and quotients are expensive enough
that each group is built once per session."""

import pytest

from mumford.catalog import theta_group, dumbbell_group, genus3_group, asm_group
from mumford.schottky import find_certificate, quotient_graph


def _bundle(group):
    cert = find_certificate(group)
    qg = quotient_graph(group, cert)
    return group, cert, qg


@pytest.fixture(scope="session")
def theta():
    return _bundle(theta_group())


@pytest.fixture(scope="session")
def dumbbell():
    return _bundle(dumbbell_group())


@pytest.fixture(scope="session")
def genus3():
    return _bundle(genus3_group())


@pytest.fixture(scope="session")
def asm3():
    return _bundle(asm_group(3))


@pytest.fixture(scope="session")
def asm3_cubed():
    return _bundle(asm_group(3, t=3))


@pytest.fixture(scope="session")
def genus3_kernels(genus3):
    from mumford.cocycles import kernel
    G, cert, qg = genus3
    return {2: kernel(G, 2, qg=qg), 4: kernel(G, 4, qg=qg)}


@pytest.fixture(scope="session")
def asm3_kernels(asm3):
    from mumford.cocycles import kernel
    G, cert, qg = asm3
    return {2: kernel(G, 2, qg=qg), 3: kernel(G, 3, qg=qg)}
