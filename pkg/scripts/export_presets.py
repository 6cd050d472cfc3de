#!/usr/bin/env python3
"""Write every registered preset as a config document, for editing or diffing."""

import sys
from pathlib import Path

from app.services.config_document import bundle_from_raw, dump_config
from app.services.scenarios import preset_registry


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("presets")
    out.mkdir(parents=True, exist_ok=True)

    for preset in preset_registry():
        bundle = bundle_from_raw({"preset": preset.name})
        path = out / f"{preset.name}.json"
        path.write_text(dump_config(bundle), encoding="utf-8")
        print(f"Written: {path} (expect {preset.expected_verdict.value})")


if __name__ == "__main__":
    main()
