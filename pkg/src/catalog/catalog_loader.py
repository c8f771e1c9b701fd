"""Load and validate the study catalog."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

from src.common.errors import ConfigError
from src.common.io_utils import load_yaml

COMMANDS = ("gradients", "build", "track", "converge", "efficiency", "energy", "maxwell")


@dataclass
class StudyDefinition:
    """Single study from catalog: one quadtrack command with its flags."""

    id: str
    command: str
    description: str = ""
    args: Dict[str, Any] = field(default_factory=dict)
    tags: List[str] = field(default_factory=list)
    slow: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"study {self.id}: unknown command '{self.command}'")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], defaults: Dict[str, Any]) -> "StudyDefinition":
        """Create from catalog dict; ``defaults['args']`` is merged under the study's own args."""
        merged = {**defaults, **data}
        for required in ("id", "command"):
            if required not in merged:
                raise ConfigError(f"catalog study missing '{required}': {data}")
        args = {**defaults.get("args", {}), **data.get("args", {})}
        return cls(
            id=merged["id"],
            command=merged["command"],
            description=merged.get("description", ""),
            args=args,
            tags=list(merged.get("tags", [])),
            slow=bool(merged.get("slow", False)),
        )

    def get_output_path(self, base_dir: Path) -> Path:
        """outputs/studies/{command}/{id}/"""
        return Path(base_dir) / self.command / self.id

    def to_argv(self, base_dir: Path) -> List[str]:
        """Command-line arguments for ``quadtrack``; lists are comma-joined, True flags bare."""
        argv = [self.command]
        for key, value in self.args.items():
            flag = "--" + key.replace("_", "-")
            if value is True:
                argv.append(flag)
            elif value is False or value is None:
                continue
            elif isinstance(value, (list, tuple)):
                argv.extend([flag, ",".join(str(v) for v in value)])
            else:
                argv.extend([flag, str(value)])
        argv.extend(["--output", str(self.get_output_path(base_dir))])
        return argv


class StudyCatalog:
    """Load and manage the study catalog."""

    def __init__(self, catalog_path: Path | str):
        self.catalog_path = Path(catalog_path)
        self.catalog_data = load_yaml(self.catalog_path)
        self.defaults = self.catalog_data.get("defaults", {})
        self.studies: List[StudyDefinition] = []
        self._load_studies()

    def _load_studies(self) -> None:
        seen = set()
        for study_data in self.catalog_data.get("studies", []):
            study = StudyDefinition.from_dict(study_data, self.defaults)
            if study.id in seen:
                raise ConfigError(f"duplicate study id '{study.id}' in {self.catalog_path}")
            seen.add(study.id)
            self.studies.append(study)

    def get_study_by_id(self, study_id: str) -> StudyDefinition | None:
        for study in self.studies:
            if study.id == study_id:
                return study
        return None

    def get_all_studies(self) -> List[StudyDefinition]:
        return self.studies

    def get_studies_by_command(self, command: str) -> List[StudyDefinition]:
        return [s for s in self.studies if s.command == command]

    def get_studies_by_tag(self, tag: str) -> List[StudyDefinition]:
        return [s for s in self.studies if tag in s.tags]

    def __len__(self) -> int:
        return len(self.studies)

    def __iter__(self):
        return iter(self.studies)
