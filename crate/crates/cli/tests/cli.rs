use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn knnidx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knnidx")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_graph(dir: &Path) -> (String, String) {
    let gr = dir.join("path.gr");
    fs::write(&gr, "c path\np sp 3 4\na 1 2 1\na 2 1 1\na 2 3 1\na 3 2 1\n").unwrap();
    let objs = dir.join("objects.txt");
    fs::write(&objs, "1\n3\n").unwrap();
    (gr.to_str().unwrap().into(), objs.to_str().unwrap().into())
}

#[test]
fn build_query_verify_on_path() {
    let dir = tempfile::tempdir().unwrap();
    let (gr, objs) = path_graph(dir.path());
    for (algorithm, sssp) in [("bottomup", "3"), ("bidirectional", "0")] {
        let bundle = dir.path().join(format!("{algorithm}.knn"));
        let bundle = bundle.to_str().unwrap();
        let o = knnidx(&["build", "--graph", &gr, "--objects", &objs, "--k", "2", "--algorithm", algorithm, "--bundle", bundle]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(&format!("sssp invocations: {sssp}\n")), "{}", stdout(&o));

        let q = dir.path().join("q.txt");
        fs::write(&q, "1\n2\n3\n").unwrap();
        let o = knnidx(&["query", "--bundle", bundle, "--queries", q.to_str().unwrap(), "--k", "2", "--show", "--warmup", "0"]);
        assert!(o.status.success());
        let out = stdout(&o);
        assert!(out.contains("1: 1@0 3@2\n"), "{out}");
        assert!(out.contains("2: 1@1 3@1\n"), "{out}");
        assert!(out.contains("3: 3@0 1@2\n"), "{out}");

        let one = dir.path().join("one.txt");
        fs::write(&one, "2\n").unwrap();
        let o = knnidx(&["query", "--bundle", bundle, "--queries", one.to_str().unwrap(), "--k", "1", "--show"]);
        let out = stdout(&o);
        assert!(out.contains("2: 1@1\n"), "{out}");
        assert!(out.contains("entries touched 1 "), "{out}");

        let o = knnidx(&["verify", "--bundle", bundle, "--graph", &gr, "--objects", &objs]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
}

#[test]
fn verification_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (gr, objs) = path_graph(dir.path());
    let bundle = dir.path().join("b.knn");
    let bundle = bundle.to_str().unwrap();
    assert!(knnidx(&["build", "--graph", &gr, "--objects", &objs, "--k", "1", "--bundle", bundle]).status.success());

    let other = dir.path().join("other.gr");
    fs::write(&other, "p sp 3 2\na 1 2 5\na 2 3 1\n").unwrap();
    let o = knnidx(&["verify", "--bundle", bundle, "--graph", other.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let wrong = dir.path().join("wrong.txt");
    fs::write(&wrong, "2\n").unwrap();
    let o = knnidx(&["verify", "--bundle", bundle, "--graph", &gr, "--objects", wrong.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(knnidx(&[]).status.code(), Some(1));
    assert_eq!(knnidx(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(knnidx(&["build", "--graph", "/nonexistent.gr", "--bundle", "/tmp/x"]).status.code(), Some(1));
    assert_eq!(knnidx(&["query", "--bundle", "/nonexistent.knn"]).status.code(), Some(1));
    assert_eq!(knnidx(&["--help"]).status.code(), Some(0));
    assert_eq!(knnidx(&["sweep", "--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let (gr, objs) = path_graph(dir.path());
    let bundle = dir.path().join("b.knn");
    let bundle = bundle.to_str().unwrap();
    let o = knnidx(&["build", "--graph", &gr, "--objects", &objs, "--k", "1", "--algorithm", "fastest", "--bundle", bundle]);
    assert_eq!(o.status.code(), Some(1));
    assert!(knnidx(&["build", "--graph", &gr, "--objects", &objs, "--k", "1", "--bundle", bundle]).status.success());
    let o = knnidx(&["query", "--bundle", bundle, "--k", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rebuild with a larger k"));

    let mut bytes = fs::read(bundle).unwrap();
    let last = bytes.len() - 12;
    bytes[last] ^= 1;
    fs::write(bundle, &bytes).unwrap();
    let o = knnidx(&["verify", "--bundle", bundle, "--graph", &gr]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

#[test]
fn update_script_applies_and_saves() {
    let dir = tempfile::tempdir().unwrap();
    let (gr, objs) = path_graph(dir.path());
    let bundle = dir.path().join("b.knn");
    let bundle = bundle.to_str().unwrap();
    assert!(knnidx(&["build", "--graph", &gr, "--objects", &objs, "--k", "1", "--bundle", bundle]).status.success());

    let script = dir.path().join("ops.txt");
    fs::write(&script, "-1\n+2\n# done\n").unwrap();
    let out_objs = dir.path().join("now.txt");
    let csv = dir.path().join("ops.csv");
    let o = knnidx(&[
        "update", "--bundle", bundle, "--script", script.to_str().unwrap(),
        "--objects", out_objs.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out_objs).unwrap(), "2\n3\n");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);

    let o = knnidx(&["verify", "--bundle", bundle, "--graph", &gr, "--objects", out_objs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("stale"));

    fs::write(&script, "+2\n").unwrap();
    let o = knnidx(&["update", "--bundle", bundle, "--script", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn degenerate_sweep_writes_single_scale_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("csv");
    let o = knnidx(&[
        "sweep", "--csv", out.to_str().unwrap(), "--side", "20", "--cells", "1", "--k", "2,5",
        "--density", "0.1", "--queries", "50", "--updates", "6", "--bottomup", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scale = fs::read_to_string(out.join("scale.csv")).unwrap();
    let rows: Vec<&str> = scale.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("cells,n,m,k,density"));
    assert!(rows[1].starts_with("1,4,4,2,0.1,"), "{}", rows[1]);
    let params = fs::read_to_string(out.join("params.csv")).unwrap();
    assert_eq!(params.lines().count(), 3);
}
