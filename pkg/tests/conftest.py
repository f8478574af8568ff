"""Shared fixture paths and loaders."""

import os
import sys

import pytest

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(TESTS_DIR, "fixtures")

sys.path.insert(0, TESTS_DIR)


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def fixtures():
    return fixture_path
