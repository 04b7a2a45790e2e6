from .container import read_container, write_container
from .dataset import Dataset, Partition, partition_iid
from .synthetic import gen_blobs, gen_synth_images

__all__ = ["Dataset", "Partition", "partition_iid", "gen_blobs", "gen_synth_images",
           "read_container", "write_container"]
