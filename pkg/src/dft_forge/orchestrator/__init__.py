from .evaluate import SummaryRow, improvement, read_summary, repair_rate, run_batch, write_summary
from .llm import HttpLlmClient, LlmClientSpec, LlmTransportError, MockLlmClient, RequestContext
from .prompts import PromptBundle, build_prompt, load_templates
from .repair import RepairAborted, RepairSession, Status, extract_code_block, repair

__all__ = [
    "HttpLlmClient", "LlmClientSpec", "LlmTransportError", "MockLlmClient", "PromptBundle",
    "RepairAborted", "RepairSession", "RequestContext", "Status", "SummaryRow", "build_prompt",
    "extract_code_block", "improvement", "load_templates", "read_summary", "repair", "repair_rate",
    "run_batch", "write_summary",
]
