"""Drive the repair loop with a scripted LLM and inspect the session record.

The script answers with no code first, then with the tied-off-reset repair,
so the loop needs two iterations. Run: python3 demos/03_repair_with_mock.py
"""

import json
import tempfile
from pathlib import Path

from dft_forge.lint import DftErrorKind
from dft_forge.orchestrator.llm import MockLlmClient
from dft_forge.orchestrator.repair import repair
from dft_forge.synthetic import generate_corpus

# an ACNCPI design whose async reset is tied off: dropping the reset preserves behaviour
design = next(d for d in generate_corpus(40, seed=1) if d.family is DftErrorKind.ACNCPI and d.variant == "const")

work = Path(tempfile.mkdtemp())
script = work / "mock"
script.mkdir()
(script / "1.txt").write_text("The reset looks fine to me.")
(script / "2.txt").write_text(f"Drop the dead reset:\n```json\n{design.fixed_json}```\n")

session = repair(design.buggy_json, design_id=design.id, llm=MockLlmClient(script), use_rag=False,
                 session_path=work / "session.json")

print(session.target_report)
print()
for it in session.iterations:
    print(f"iteration {it.index}: {it.verdict}")
    print("  feedback:", it.feedback.splitlines()[0])
print("status:", session.status.value)

saved = json.loads((work / "session.json").read_text())
print("persisted keys:", ", ".join(sorted(saved)))
