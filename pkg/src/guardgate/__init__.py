"""guardgate: a guardrail gateway for LLM traffic.

Rules (static patterns, natural-language keyword/lexicon checks, trained
classifiers) combine into direction-scoped policies; policies plus a
system prompt and action configuration form an assistant. The gateway
proxies chat completions through an assistant's input and output policies,
redacts or blocks as configured, resolves conflicts between guardrails
via their ethical vectors, and escalates to human review when automatic
resolution is not possible.
"""

__version__ = "0.1.0"
