import pytest
import transformers

from adapter_fixtures import (
    SMOKE_GEN,
    batch_record,
    formatted_record,
    nli_record,
    write_records,
)
from neural_adapter.generator import train_generator


@pytest.fixture(scope="session", autouse=True)
def _quiet_transformers():
    transformers.utils.logging.set_verbosity_error()
    transformers.utils.logging.disable_progress_bar()


@pytest.fixture(scope="session")
def formatted_train_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "formatted_train.jsonl"
    return write_records(path, [formatted_record(i) for i in range(48)])


@pytest.fixture(scope="session")
def generation_batch_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "generation_batch.jsonl"
    return write_records(path, [batch_record(i) for i in range(10)])


@pytest.fixture(scope="session")
def generator_model_dir(tmp_path_factory, formatted_train_file):
    model_dir = tmp_path_factory.mktemp("model") / "generator"
    train_generator(formatted_train_file, model_dir, config=SMOKE_GEN,
                    from_scratch=True)
    return model_dir


@pytest.fixture(scope="session")
def nli_train_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "nli_train.jsonl"
    return write_records(path, [nli_record(i) for i in range(24)])


@pytest.fixture(scope="session")
def nli_eval_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "nli_eval.jsonl"
    return write_records(path, [nli_record(i) for i in range(8)])
