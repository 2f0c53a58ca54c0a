"""Interactive tree-of-thoughts orchestration.

A human-steerable reasoning loop over a chat LLM: candidate thoughts are
generated layer by layer, self-evaluated and ranked by the model, grouped by
semantic equivalence, and selected for display — with the user free to expand
any node, inject their own thoughts, and watch live pipeline status.
"""

__version__ = "0.1.0"
