"""End-to-end tests of the command-line surface (main.main)."""

import pathlib

import numpy as np
import pytest
import soundfile as sf

import config
import main
from config import load_settings
from fixtures import Fixture, synth_fixture
from layers import expected_param_count, init_model_params
from models.Checkpoint import Checkpoint
from train_model.run import load_training_set
from training import save_checkpoint

# N=9, T=6, L=1: small enough to train for two epochs in a test.
TINY = "sample_rate=8000\nn_fft=16\nhop=4\nsegment_frames=6\ncontext_frames=1\nbatch_size=16\nmax_epochs=2\n"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(config.SEED_ENV_VAR, raising=False)
    (tmp_path / 'tiny.cfg').write_text(TINY)
    return tmp_path


def tiny_checkpoint(path) -> str:
    params = init_model_params(n_bins=9, T=6, L=1, seed=0)
    save_checkpoint(Checkpoint(params=params, config=config.TrainConfig(n_bins=9, segment_frames=6,
                                                                        context_frames=1),
                               epoch=1, best_loss=1.0, epoch_losses=[1.0]), path)
    return str(path)


class TestParams:
    def test_full_size_count(self, workdir, capsys):
        assert main.main(['params', '--run-id', 'p']) == 0
        assert '24175650' in capsys.readouterr().out.splitlines()

    def test_count_follows_n_fft(self, workdir, capsys):
        assert main.main(['params', '--n-fft', '0', '--run-id', 'p']) == 1
        capsys.readouterr()
        assert main.main(['params', '--config', 'tiny.cfg', '--run-id', 'p']) == 0
        assert str(expected_param_count(9)) in capsys.readouterr().out.splitlines()

    def test_missing_checkpoint(self, workdir):
        assert main.main(['params', '--checkpoint', 'nowhere.skf', '--run-id', 'p']) == 1


class TestArguments:
    def test_alpha_out_of_range(self, workdir, capsys):
        assert main.main(['params', '--alpha', '3', '--run-id', 'a']) == 1
        assert 'error:' in capsys.readouterr().err

    def test_unknown_flag(self, workdir):
        with pytest.raises(SystemExit) as excinfo:
            main.main(['params', '--no-such-flag'])
        assert excinfo.value.code == 2

    def test_unknown_strategy(self, workdir):
        with pytest.raises(SystemExit) as excinfo:
            main.main(['separate', '--input', 'x.wav', '--strategy', 'nmf'])
        assert excinfo.value.code == 2

    def test_two_model_strategy_needs_two_checkpoints(self, workdir, capsys):
        checkpoint = tiny_checkpoint(workdir / 'one.skf')
        assert main.main(['synth', '--config', 'tiny.cfg', '--duration', '0.25', '--run-id', 's']) == 0
        mixture = workdir / 'outputs' / 's' / 'data' / 'fixture' / 'mixture.wav'
        capsys.readouterr()
        assert main.main(['separate', '--config', 'tiny.cfg', '--input', str(mixture),
                          '--strategy', 'd', '--checkpoint', checkpoint, '--run-id', 'd']) == 1
        assert 'strategy requires two checkpoints' in capsys.readouterr().out


class TestCommands:
    def test_gradcheck(self, workdir, capsys):
        assert main.main(['gradcheck', '--run-id', 'g']) == 0
        printed = [line for line in capsys.readouterr().out.splitlines() if ' - ' not in line]
        assert float(printed[-1]) < 1e-4

    def test_synth_writes_track(self, workdir):
        assert main.main(['synth', '--config', 'tiny.cfg', '--duration', '0.5',
                          '--output', 'data', '--run-id', 's']) == 0
        names = sorted(p.name for p in (workdir / 'data' / 'fixture').iterdir())
        assert names == ['accompaniment.wav', 'mixture.wav', 'voice.wav']
        assert (workdir / 'outputs' / 's' / 'logs' / 'app.log').is_file()

    def test_oracle_separation(self, workdir):
        main.main(['synth', '--config', 'tiny.cfg', '--duration', '0.25', '--output', 'data', '--run-id', 's'])
        track = workdir / 'data' / 'fixture'
        assert main.main(['separate', '--config', 'tiny.cfg', '--input', str(track / 'mixture.wav'),
                          '--strategy', 'wiener', '--sources', str(track),
                          '--output', 'est.wav', '--run-id', 'o']) == 0
        assert (workdir / 'est.wav').is_file()

    def test_prepare_downmixes_stems(self, workdir):
        song = workdir / 'stems' / 'song'
        song.mkdir(parents=True)
        for name in ('vocals', 'drums'):
            sf.write(str(song / f'{name}.wav'), np.full((100, 2), 0.25, dtype=np.float32), 8000, subtype='FLOAT')
        assert main.main(['prepare', '--stems', 'stems', '--output', 'data', '--run-id', 'p']) == 0
        assert (workdir / 'data' / 'song' / 'accompaniment.wav').is_file()

    def test_train_separate_evaluate_pipeline(self, workdir, capsys):
        base = ['--config', 'tiny.cfg']
        assert main.main(['synth', *base, '--duration', '0.25', '--output', 'data', '--run-id', 's']) == 0
        assert main.main(['train', *base, '--data', 'data', '--run-id', 't']) == 0
        checkpoint = workdir / 'outputs' / 't' / config.CHECKPOINT_FILENAME
        assert checkpoint.is_file()
        assert (workdir / 'outputs' / 't' / 'epoch_losses.csv').read_text().startswith('epoch,loss\n')

        assert main.main(['separate', *base, '--input', 'data/fixture/mixture.wav',
                          '--checkpoint', str(checkpoint), '--run-id', 'e']) == 0
        assert (workdir / 'outputs' / 'e' / 'estimate.wav').is_file()

        assert main.main(['evaluate', *base, '--data', 'data', '--checkpoint', str(checkpoint),
                          '--run-id', 'r']) == 0
        rows = (workdir / 'outputs' / 'r' / config.REPORT_CSV_FILENAME).read_text().splitlines()
        assert rows[0] == 'track,metric,value'
        assert {row.split(',')[0] for row in rows[1:]} >= {'fixture'}
        assert pathlib.Path(workdir / 'outputs' / 'r' / config.REPORT_TEXT_FILENAME).is_file()

    def test_train_and_evaluate_on_paired_layout(self, workdir):
        track = synth_fixture(Fixture(duration=0.25, sample_rate=8000))
        song = workdir / 'paired' / 'song'
        song.mkdir(parents=True)
        sf.write(str(song / 'mixture.wav'), track['mixture'].samples, 8000, subtype='FLOAT')
        sf.write(str(song / 'target.wav'), track['voice'].samples, 8000, subtype='FLOAT')

        dataset = load_training_set(workdir / 'paired', load_settings('tiny.cfg'))
        assert dataset.tracks[0] == 'song'
        assert dataset.mix.shape[1:] == (6, 9)

        assert main.main(['train', '--config', 'tiny.cfg', '--data', 'paired', '--run-id', 'pt']) == 0
        checkpoint = workdir / 'outputs' / 'pt' / config.CHECKPOINT_FILENAME
        assert main.main(['evaluate', '--config', 'tiny.cfg', '--data', 'paired',
                          '--checkpoint', str(checkpoint), '--run-id', 'pe']) == 0
        assert (workdir / 'outputs' / 'pe' / config.REPORT_CSV_FILENAME).is_file()

    def test_separate_missing_checkpoint(self, workdir):
        main.main(['synth', '--config', 'tiny.cfg', '--duration', '0.25', '--output', 'data', '--run-id', 's'])
        assert main.main(['separate', '--config', 'tiny.cfg', '--input', 'data/fixture/mixture.wav',
                          '--checkpoint', 'missing.skf', '--run-id', 'm']) == 1
