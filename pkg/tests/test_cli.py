import io
import json

import numpy as np
import pytest

from maskface import calibration as cal
from maskface.cli import main
from maskface.mesh import read_obj, write_obj
from maskface.synthesis import parse_timeline

from conftest import FIXTURES

TRANSCRIPT = str(FIXTURES / "golden_transcript.txt")
EMOTIONS = str(FIXTURES / "golden_emotions.csv")
CAMERA = str(FIXTURES / "camera.txt")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def single_error_line(err, kind):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"maskface: error[{kind}]: ")
    return lines[0]


# ---------------------------------------------------------------- synthesize

def test_synthesize_seven_seconds(capsys):
    code, out, _ = run(capsys, "synthesize", TRANSCRIPT, "--emotions", EMOTIONS)
    assert code == 0
    tl = parse_timeline(out)
    assert len(tl) == 210 and tl.fps == 30
    w = np.array([f.viseme_weights for f in tl.frames])
    assert np.all(w >= 0)


def test_synthesize_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "synthesize", TRANSCRIPT, "--emotions", EMOTIONS, "-o", a)[0] == 0
    assert run(capsys, "synthesize", TRANSCRIPT, "--emotions", EMOTIONS, "-o", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_synthesize_empty_transcript(capsys, tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("")
    code, out, err = run(capsys, "synthesize", p)
    assert code == 0 and err == ""
    assert len(parse_timeline(out)) == 0


def test_synthesize_unknown_symbol(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("sil\t0\t100\nzz\t100\t200\n")
    code, out, err = run(capsys, "synthesize", p)
    assert code == 1 and out == ""
    line = single_error_line(err, "UnknownSymbol")
    assert "line 2" in line


def test_synthesize_non_monotonic(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("m\t0\t100\na\t50\t200\n".replace("a\t", "æ\t"))
    code, _, err = run(capsys, "synthesize", p)
    assert code == 1
    assert "line 2" in single_error_line(err, "NonMonotonic")


def test_synthesize_bad_emotion_script(capsys, tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("glee,0,100,0.5\n")
    code, _, err = run(capsys, "synthesize", TRANSCRIPT, "--emotions", p)
    assert code == 1
    single_error_line(err, "ScriptError")


def test_synthesize_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("m\t0\t100\n"))
    code, out, _ = run(capsys, "synthesize", "-")
    assert code == 0
    assert len(parse_timeline(out)) == 3


def test_basic_lipsync_flag(capsys):
    _, proposed, _ = run(capsys, "synthesize", TRANSCRIPT)
    _, basic, _ = run(capsys, "synthesize", TRANSCRIPT, "--basic-lipsync")
    wb = np.array([f.viseme_weights for f in parse_timeline(basic).frames])
    # basic mode: one-hot frames
    assert np.all(np.isin(wb, (0.0, 1.0)))
    assert np.all(wb.sum(axis=1) == 1.0)
    assert proposed != basic


def test_fps_override(capsys):
    _, out, _ = run(capsys, "--fps", 60, "synthesize", TRANSCRIPT)
    assert len(parse_timeline(out)) == 420


def test_pose_out_and_gaze_target(capsys, tmp_path):
    pose = tmp_path / "pose.csv"
    code, out, _ = run(capsys, "synthesize", TRANSCRIPT, "--pose-out", pose,
                       "--gaze-target", "1,0,1", "--head-follow")
    assert code == 0
    rows = pose.read_text().splitlines()
    assert rows[0] == "frame,yaw,pitch,roll" and len(rows) == 211
    assert float(rows[1].split(",")[1]) == pytest.approx(45.0)
    fb = parse_timeline(out).frames[0]
    assert fb.gaze == pytest.approx((0.0, 0.0), abs=1e-12)


def test_export_mesh(capsys, tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("m\t0\t100\nɑ\t100\t200\n")
    out_dir = tmp_path / "frames"
    code, _, _ = run(capsys, "synthesize", p, "--export-mesh", out_dir, "-o", tmp_path / "tl.csv")
    assert code == 0
    files = sorted(out_dir.glob("*.obj"))
    assert [f.name for f in files] == [f"frame_{k:05d}.obj" for k in range(6)]
    assert len(read_obj(files[0]).vertices) > 1000


def test_missing_morphset(capsys, tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("m\t0\t100\n")
    (tmp_path / "manifest.json").write_text(json.dumps({"neutral": "nope.obj", "targets": []}))
    code, _, err = run(capsys, "synthesize", p, "--export-mesh", tmp_path / "f",
                       "--morphset", tmp_path / "manifest.json", "-o", tmp_path / "tl.csv")
    assert code == 2
    assert "nope.obj" in single_error_line(err, "MissingAsset")


def test_missing_file(capsys):
    code, _, err = run(capsys, "synthesize", "/nonexistent/t.txt")
    assert code == 1
    single_error_line(err, "IOError")


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"fps": -1}')
    code, _, err = run(capsys, "--config", cfg, "synthesize", TRANSCRIPT)
    assert code == 1
    single_error_line(err, "ConfigError")


# ---------------------------------------------------------------- calibrate

def test_calibrate_identity(capsys):
    code, out, _ = run(capsys, "calibrate", FIXTURES / "identity_4x4.csv",
                       "--rows", 4, "--cols", 4, "--width", 640, "--height", 480)
    assert code == 0
    pm = cal.PiecewiseMap.from_json(out)
    for cell in pm.cells.reshape(-1, 3, 3):
        assert np.abs(cell - np.eye(3)).max() < 1e-9


def test_calibrate_warp_round_trip(capsys, tmp_path, rng):
    out_file = tmp_path / "map.json"
    pgm = tmp_path / "board.pgm"
    code, _, _ = run(capsys, "calibrate", FIXTURES / "warp_4x4.csv", "--rows", 4, "--cols", 4,
                     "--width", 640, "--height", 480, "-o", out_file, "--pattern", pgm)
    assert code == 0
    assert pgm.read_bytes().startswith(b"P5\n640 480\n255\n")
    pm = cal.PiecewiseMap.from_json(out_file.read_text())
    mask = cal.parse_correspondences((FIXTURES / "warp_4x4.csv").read_text(), 4, 4)
    got, _ = pm.map_points(pm.screen_corners.reshape(-1, 2))
    assert np.abs(got - mask.reshape(-1, 2)).max() < 1e-9
    pts = rng.uniform(0, [640, 480], (200, 2))
    back, _ = pm.inverse_points(pm.map_points(pts)[0])
    assert np.abs(back - pts).max() < 1e-8


def test_calibrate_jitter_is_seeded(capsys):
    args = ["calibrate", FIXTURES / "identity_4x4.csv", "--rows", 4, "--cols", 4,
            "--width", 640, "--height", 480, "--jitter", 0.5]
    a = run(capsys, "--seed", 3, *args)[1]
    b = run(capsys, "--seed", 3, *args)[1]
    c = run(capsys, "--seed", 4, *args)[1]
    assert a == b != c


def test_calibrate_malformed(capsys, tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("row,col,mask_x,mask_y\n0,0,1\n")
    code, _, err = run(capsys, "calibrate", p, "--rows", 1, "--cols", 1, "--width", 10, "--height", 10)
    assert code == 1
    single_error_line(err, "CalibrationError")


def test_calibrate_bad_dimensions(capsys):
    code, _, err = run(capsys, "calibrate", FIXTURES / "identity_4x4.csv", "--rows", 0, "--cols", 4,
                       "--width", 640, "--height", 480)
    assert code == 1
    single_error_line(err, "BadDimensions")


# ---------------------------------------------------------------- predistort

@pytest.fixture
def neutral_obj(tmp_path):
    from maskface.assets import make_neutral

    mesh, _ = make_neutral(12, 16)
    path = tmp_path / "neutral.obj"
    write_obj(mesh, path)
    return path, mesh


def test_predistort_identity(capsys, tmp_path, neutral_obj):
    path, mesh = neutral_obj
    run(capsys, "calibrate", FIXTURES / "identity_4x4.csv", "--rows", 4, "--cols", 4,
        "--width", 640, "--height", 480, "-o", tmp_path / "map.json")
    out = tmp_path / "out.obj"
    code, _, _ = run(capsys, "predistort", path, "--matrices", CAMERA, "--map", tmp_path / "map.json", "-o", out)
    assert code == 0
    assert np.abs(read_obj(out).vertices - mesh.vertices).max() < 1e-9


def test_predistort_placement_translation(capsys, tmp_path, neutral_obj):
    path, mesh = neutral_obj
    (tmp_path / "pl.txt").write_text("1 0 5\n0 1 -3\n")
    code, out, _ = run(capsys, "predistort", path, "--matrices", CAMERA, "--placement", tmp_path / "pl.txt")
    assert code == 0
    (tmp_path / "o.obj").write_text(out)
    cams = cal.parse_camera_matrices(open(CAMERA).read())
    before = cal.project_vertices(mesh.vertices, cams.wvp)[0]
    after = cal.project_vertices(read_obj(tmp_path / "o.obj").vertices, cams.wvp)[0]
    assert np.abs(after - before - [5, -3]).max() < 1e-6


def test_predistort_singular_wvp(capsys, tmp_path, neutral_obj):
    path, _ = neutral_obj
    m = tmp_path / "m.txt"
    proj = np.eye(4)
    proj[2, 2] = 0.0
    m.write_text(cal.format_camera_matrices(cal.CameraMatrices(np.eye(4), np.eye(4), proj)))
    code, _, err = run(capsys, "predistort", path, "--matrices", m)
    assert code == 2
    single_error_line(err, "UninvertibleWVP")


# ---------------------------------------------------------------- gaze

def test_gaze_seats(capsys):
    code, out, _ = run(capsys, "gaze", FIXTURES / "gaze_seats.csv")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "index,label,eye_yaw,eye_pitch,neck_yaw,neck_pitch,neck_roll,clamped"
    yaws = [float(r.split(",")[2]) for r in rows[1:]]
    np.testing.assert_allclose(yaws, [-45, -25, 0, 25, 45], atol=1e-9)


def test_gaze_empty(capsys, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    code, out, _ = run(capsys, "gaze", p)
    assert code == 0
    assert out.splitlines() == ["index,label,eye_yaw,eye_pitch,neck_yaw,neck_pitch,neck_roll,clamped"]


def test_gaze_overhead_head_mode(capsys, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0,10,0.5,ceiling\n")
    code, out, _ = run(capsys, "gaze", p, "--mode", "head")
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert float(row[5]) == 15.0
    assert row[7] == "pitch"
    # the eyes make up the rest of the elevation
    assert float(row[3]) > 0


def test_gaze_degenerate_row_skipped(capsys, caplog, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0,0,0,self\n0,0,2,front\n")
    code, out, _ = run(capsys, "gaze", p)
    assert code == 0
    assert [r.split(",")[1] for r in out.splitlines()[1:]] == ["front"]
    assert "skipped" in caplog.text


def test_gaze_malformed(capsys, tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0,0,1\n0,x,1\n")
    code, _, err = run(capsys, "gaze", p)
    assert code == 1
    assert "line 2" in single_error_line(err, "MalformedLine")
