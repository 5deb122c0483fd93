import inspect
import re
import sys
from collections.abc import Callable
from pathlib import Path

import attrs

from sailcone import (
    PlanSolution,
    SolverSettings,
    build_program,
    check_tightness,
    dp_oracle,
    fit_poly2,
    parse_scenario,
    pareto_sweep,
    resimulate_plan,
    run_zigzag,
    sample_path,
    solve,
    solve_plan,
    step_rk2,
)

REPO_ROOT = Path(__file__).parents[1]

SECTIONS: dict[str, list[Callable]] = {
    "Scenarios": [parse_scenario],
    "Path": [sample_path],
    "Propeller": [fit_poly2],
    "Planning": [build_program, solve, solve_plan, check_tightness, pareto_sweep, dp_oracle],
    "Simulation": [step_rk2, run_zigzag, resimulate_plan],
}


@attrs.define(frozen=True)
class ReadmeDoc:
    name: str
    sig: str = attrs.field(converter=str)
    doc: str

    def to_readme(self) -> str:
        return "\n".join([f"### `{self.name}`", f"```python\n{self.name}{self.sig}\n```", strip_doc(self.doc)])


def _class_docs(cls: type) -> list[str]:
    lines = [f"### `{cls.__name__}`", strip_doc(cls.__doc__ or "")]
    if attrs.has(cls):
        fields = ", ".join(f"`{field.name}`" for field in attrs.fields(cls))
        lines.append(f"Fields: {fields}")
    return ["\n".join(lines)]


def create_readme_lines() -> str:
    readme_lines = []
    for title, functions in SECTIONS.items():
        readme_lines.append(f"## {title}")
        readme_lines.extend(
            ReadmeDoc(fn.__name__, inspect.signature(fn), fn.__doc__ or "").to_readme() for fn in functions
        )
    readme_lines.append("## Records")
    for cls in (SolverSettings, PlanSolution):
        readme_lines.extend(_class_docs(cls))
    return "\n\n".join(readme_lines)


def update_readme(new_docs: str, readme_path: Path = REPO_ROOT / "README.md") -> int:
    readme_txt = readme_path.read_text(encoding="utf-8")
    pattern = r"(# API Reference)(.*?)(::)"
    updated_readme = re.sub(pattern, lambda m: f"{m.group(1)}\n\n{new_docs}\n{m.group(3)}", readme_txt, flags=re.DOTALL)
    if readme_txt != updated_readme:
        readme_path.write_text(updated_readme, encoding="utf-8")
        return 1
    return 0


def strip_doc(doc: str) -> str:
    """Dedent a docstring and turn its RST code blocks into fenced markdown."""
    lines = inspect.cleandoc(doc).splitlines()
    out, fenced = [], False
    for line in lines:
        if line.strip().startswith(".. code-block::"):
            out.append("```python")
            fenced = True
            continue
        out.append(line.removeprefix("    ") if fenced else line.strip())
    if fenced:
        out.append("```")
    return "\n".join(out)


if __name__ == "__main__":
    sys.exit(update_readme(create_readme_lines()))
