from .shards import RecordKind, write_shard, read_shard, shard_info
from .checkpoint import save_checkpoint, load_checkpoint, read_checkpoint_header, parameter_count
from .manifest import Manifest, build_manifest, save_manifest, load_manifest
from .tables import (
    atomic_write, write_json, read_json, write_table_csv, read_table_csv, write_matrix_csv,
    read_farfield_csv, sha256_file,
)
