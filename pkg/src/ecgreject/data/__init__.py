"""Records, the synthetic generator, length conditioning and the ECGD format."""

__docformat__ = 'google'

from ecgreject.data.record import (EcgRecord, Dataset, GroundTruth,
                                   SAMPLE_RATE, LEAD_COUNT, LEAD_NAMES)
from ecgreject.data.synth import (SynthConfig, ClassMorphology,
                                  DEFAULT_MORPHOLOGY, SyntheticDataset,
                                  generate)
from ecgreject.data.condition import condition_length, condition_batch
from ecgreject.data.container import (encode_dataset, decode_dataset,
                                      save_dataset, load_dataset, file_hash,
                                      listing_path, truth_path,
                                      format_listing, format_truth,
                                      parse_truth, load_truth)

__all__ = [
    'EcgRecord', 'Dataset', 'GroundTruth', 'SAMPLE_RATE', 'LEAD_COUNT',
    'LEAD_NAMES', 'SynthConfig', 'ClassMorphology', 'DEFAULT_MORPHOLOGY',
    'SyntheticDataset', 'generate', 'condition_length', 'condition_batch',
    'encode_dataset', 'decode_dataset', 'save_dataset', 'load_dataset',
    'file_hash', 'listing_path', 'truth_path', 'format_listing',
    'format_truth', 'parse_truth', 'load_truth'
]
