from .report_store import RunManifest, read_table, write_json, write_table

__all__ = ["RunManifest", "read_table", "write_json", "write_table"]
