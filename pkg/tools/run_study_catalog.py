#!/usr/bin/env python3
"""
Run every study of the catalog, each as a `quadtrack` subprocess.

Usage:
    python tools/run_study_catalog.py \
        --catalog config/study_catalog.yaml \
        --output outputs/studies \
        --skip-slow
"""

import sys
import argparse
import subprocess
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.catalog.catalog_loader import StudyCatalog
from src.common.logging import setup_logger

logger = setup_logger("run_study_catalog")


def main():
    parser = argparse.ArgumentParser(description="Run all catalog studies")
    parser.add_argument(
        "--catalog",
        default="config/study_catalog.yaml",
        help="Path to study catalog",
    )
    parser.add_argument(
        "--output",
        default="outputs/studies",
        help="Base output directory",
    )
    parser.add_argument(
        "--skip-slow",
        action="store_true",
        help="Skip studies marked slow",
    )
    parser.add_argument(
        "--tag",
        help="Run only studies carrying this tag",
    )
    parser.add_argument(
        "--fail-fast",
        action="store_true",
        help="Stop on first error",
    )
    parser.add_argument(
        "--study-ids",
        nargs="*",
        help="Run only specific study IDs (optional)",
    )

    args = parser.parse_args()

    logger.info(f"Loading catalog: {args.catalog}")
    catalog = StudyCatalog(args.catalog)

    studies = catalog.get_studies_by_tag(args.tag) if args.tag else catalog.get_all_studies()
    if args.study_ids:
        studies = [s for s in studies if s.id in args.study_ids]
    if args.skip_slow:
        studies = [s for s in studies if not s.slow]
    logger.info(f"Running {len(studies)} of {len(catalog)} studies")

    success_count = 0
    failure_count = 0

    for i, study in enumerate(studies, 1):
        logger.info(f"[{i}/{len(studies)}] {study.id}: {study.description}")
        cmd = [sys.executable, "-m", "src.cli.main", *study.to_argv(Path(args.output))]

        try:
            subprocess.run(cmd, check=True, capture_output=False)
            success_count += 1
            logger.info(f"✓ {study.id} completed")

        except subprocess.CalledProcessError as e:
            failure_count += 1
            logger.error(f"✗ {study.id} failed with code {e.returncode}")

            if args.fail_fast:
                logger.error("Fail-fast enabled, stopping")
                return 1

    logger.info("=" * 60)
    logger.info("STUDY SUMMARY")
    logger.info("=" * 60)
    logger.info(f"Total studies: {len(studies)}")
    logger.info(f"Success: {success_count}")
    logger.info(f"Failures: {failure_count}")
    logger.info(f"Output: {args.output}")

    if failure_count > 0:
        logger.warning(f"{failure_count} studies failed")
        return 1

    logger.info("✓ All studies completed successfully")
    return 0


if __name__ == "__main__":
    sys.exit(main())
