"""Bundled fixtures: the small X-bar grammar, its trained counterpart, and
the supplementary sentences that exercise the implicit rules."""

from importlib.resources import files


def fixture_text(name):
    return files(__package__).joinpath(name).read_text()


def fixture_path(name):
    """Filesystem path of a bundled fixture (the package is installed from
    plain files, so resources are real paths)."""
    return str(files(__package__).joinpath(name))


def xbar_text():
    return fixture_text("xbar.gr")


def trained_rules_text():
    return fixture_text("xbar_trained.rules")


def supplementary_text():
    return fixture_text("supplementary.txt")
