"""Exception hierarchy shared by every layer.

Each error carries a stable machine-readable ``code`` so the API boundary can
map failures to HTTP responses without string matching, and the CLI can print
the same token on exit.
"""

from __future__ import annotations


class ItotError(Exception):
    """Base class; ``code`` is the stable machine-readable token."""

    code = "internal-error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# -- settings / input validation ------------------------------------------

class InvalidSettings(ItotError):
    code = "invalid-settings"


class EmptyMainPrompt(ItotError):
    code = "empty-main-prompt"


class EmptyText(ItotError):
    code = "empty-text"


class SettingsImmutable(ItotError):
    code = "settings-immutable"


# -- tree structure ---------------------------------------------------------

class UnknownParent(ItotError):
    code = "unknown-parent"


class UnknownNode(ItotError):
    code = "unknown-node"


class ParentAlreadyExpanded(ItotError):
    code = "parent-already-expanded"


class ParentNotExpanded(ItotError):
    code = "parent-not-expanded"


class NodeIsLeaf(ItotError):
    code = "node-is-leaf"


class InvalidTree(ItotError):
    """A tree document violates a structural invariant."""

    code = "invalid-tree"


# -- parsing ----------------------------------------------------------------

class ParseFailure(ItotError):
    code = "parse-failure"


class AllVotesInvalid(ItotError):
    code = "all-votes-invalid"


# -- providers ---------------------------------------------------------------

class ProviderUnavailable(ItotError):
    code = "provider-unavailable"


class AuthFailure(ItotError):
    code = "auth-failure"


class ProviderTimeout(ItotError):
    code = "timeout"


class FixtureMiss(ItotError):
    """A scripted provider had no fixture for the request; tests fail loudly."""

    code = "fixture-miss"


# -- engine -------------------------------------------------------------------

class GenerationFailed(ItotError):
    code = "generation-failed"


class EvaluationFailed(ItotError):
    code = "evaluation-failed"


class ExpansionInProgress(ItotError):
    code = "expansion-in-progress"


# -- store ---------------------------------------------------------------------

class StorageIO(ItotError):
    code = "storage-io"


class NotFound(ItotError):
    code = "not-found"


class SchemaMismatch(ItotError):
    code = "schema-mismatch"


# -- service -----------------------------------------------------------------

class BindFailure(ItotError):
    code = "bind-failure"


class ConfigInvalid(ItotError):
    code = "config-invalid"
