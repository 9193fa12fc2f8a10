//! Reading and writing disc maps.
//!
//! Files carry the nodal values only; the mesh is canonical for its
//! resolution and is rebuilt on read, with node positions cross-checked.
//! Maps are written with shortest-roundtrip float formatting, so a
//! write/read cycle reproduces the nodal data bit for bit.  Writes go
//! through a temporary file and a rename, so a crash never leaves a
//! truncated map behind.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disc::map::MeshMap;
use crate::disc::mesh::build_disc_mesh;
use crate::error::{Error, Result};
use crate::geometry::Point6;

pub const MAP_FORMAT: &str = "fatdisc-map";
pub const MAP_FORMAT_VERSION: u32 = 1;

const CSV_HEADER: &str = "node,x,y,x1,x2,y1,y2,z1,z2";
const POSITION_TOL: f64 = 1e-9;

#[derive(Serialize, Deserialize)]
struct MapFile {
    format: String,
    version: u32,
    resolution: u32,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    values: Vec<[f64; 6]>,
}

/// The ring count whose canonical mesh has exactly `n` nodes, if any.
pub fn resolution_for_nodes(n: usize) -> Option<u32> {
    let mut r = 1u32;
    loop {
        let count = 1 + 3 * (r as usize) * (r as usize + 1);
        if count == n {
            return Some(r);
        }
        if count > n {
            return None;
        }
        r += 1;
    }
}

/// Write `contents` through a sibling temp file and rename, so readers
/// never observe a half-written file.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let mut file = fs::File::create(tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

fn mesh_for_values(path: &Path, count: usize) -> Result<std::sync::Arc<crate::disc::mesh::DiscMesh>> {
    let resolution = resolution_for_nodes(count).ok_or_else(|| Error::Parse {
        at: path.display().to_string(),
        msg: format!("{count} nodes does not match any disc mesh (1 + 3r(r+1))"),
    })?;
    Ok(std::sync::Arc::new(build_disc_mesh(resolution)?))
}

fn check_positions(
    path: &Path,
    mesh: &crate::disc::mesh::DiscMesh,
    nodes: &[[f64; 2]],
) -> Result<()> {
    for (v, p) in nodes.iter().enumerate() {
        let canon = mesh.nodes[v];
        if (p[0] - canon.x).abs() > POSITION_TOL || (p[1] - canon.y).abs() > POSITION_TOL {
            return Err(Error::Parse {
                at: format!("{}:node {v}", path.display()),
                msg: format!(
                    "node position ({}, {}) deviates from the canonical mesh ({}, {})",
                    p[0], p[1], canon.x, canon.y
                ),
            });
        }
    }
    Ok(())
}

/// Write a map as CSV, one row per node.
pub fn write_map_csv(path: impl AsRef<Path>, map: &MeshMap) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(64 * map.values.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (v, p) in map.values.iter().enumerate() {
        let node = map.mesh.nodes[v];
        out.push_str(&format!(
            "{v},{},{},{},{},{},{},{},{}\n",
            node.x, node.y, p[0], p[1], p[2], p[3], p[4], p[5]
        ));
    }
    atomic_write(path, &out)
}

/// Read a map from CSV written by [`write_map_csv`].
pub fn read_map_csv(path: impl AsRef<Path>) -> Result<MeshMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                at: format!("{}:1", path.display()),
                msg: format!("expected header `{CSV_HEADER}`, found `{header}`"),
            })
        }
        None => {
            return Err(Error::Parse {
                at: path.display().to_string(),
                msg: "empty file".into(),
            })
        }
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("{}:{}", path.display(), idx + 1);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                at,
                msg: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let row: usize = fields[0].trim().parse().map_err(|e| Error::Parse {
            at: at.clone(),
            msg: format!("bad node index `{}`: {e}", fields[0]),
        })?;
        if row != values.len() {
            return Err(Error::Parse {
                at,
                msg: format!("node index {row} out of order (expected {})", values.len()),
            });
        }
        let mut nums = [0.0f64; 8];
        for (i, f) in fields[1..].iter().enumerate() {
            nums[i] = f.trim().parse().map_err(|e| Error::Parse {
                at: at.clone(),
                msg: format!("bad float `{f}`: {e}"),
            })?;
        }
        nodes.push([nums[0], nums[1]]);
        values.push(Point6::new(
            nums[2], nums[3], nums[4], nums[5], nums[6], nums[7],
        ));
    }
    let mesh = mesh_for_values(path, values.len())?;
    check_positions(path, &mesh, &nodes)?;
    MeshMap::new(mesh, values)
}

/// Write a map as self-describing JSON.
pub fn write_map_json(path: impl AsRef<Path>, map: &MeshMap) -> Result<()> {
    let path = path.as_ref();
    let file = MapFile {
        format: MAP_FORMAT.into(),
        version: MAP_FORMAT_VERSION,
        resolution: map.mesh.resolution,
        nodes: map.mesh.nodes.iter().map(|p| [p.x, p.y]).collect(),
        elements: map.mesh.elements.clone(),
        values: map
            .values
            .iter()
            .map(|p| [p[0], p[1], p[2], p[3], p[4], p[5]])
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse {
        at: path.display().to_string(),
        msg: e.to_string(),
    })?;
    atomic_write(path, &text)
}

/// Read a map from JSON written by [`write_map_json`].
pub fn read_map_json(path: impl AsRef<Path>) -> Result<MeshMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let file: MapFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        at: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        msg: e.to_string(),
    })?;
    if file.format != MAP_FORMAT {
        return Err(Error::Parse {
            at: path.display().to_string(),
            msg: format!("format `{}` is not `{MAP_FORMAT}`", file.format),
        });
    }
    if file.version != MAP_FORMAT_VERSION {
        return Err(Error::Parse {
            at: path.display().to_string(),
            msg: format!(
                "version {} is not supported (expected {MAP_FORMAT_VERSION})",
                file.version
            ),
        });
    }
    let mesh = std::sync::Arc::new(build_disc_mesh(file.resolution)?);
    if file.values.len() != mesh.num_nodes() {
        return Err(Error::Parse {
            at: path.display().to_string(),
            msg: format!(
                "{} values for a resolution-{} mesh with {} nodes",
                file.values.len(),
                file.resolution,
                mesh.num_nodes()
            ),
        });
    }
    if !file.nodes.is_empty() {
        check_positions(path, &mesh, &file.nodes)?;
    }
    if !file.elements.is_empty() && file.elements != mesh.elements {
        return Err(Error::Parse {
            at: path.display().to_string(),
            msg: "element table deviates from the canonical mesh".into(),
        });
    }
    let values = file
        .values
        .iter()
        .map(|v| Point6::new(v[0], v[1], v[2], v[3], v[4], v[5]))
        .collect();
    MeshMap::new(mesh, values)
}

/// Read a map, picking the format from the file extension.
pub fn read_map(path: impl AsRef<Path>) -> Result<MeshMap> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_map_csv(path),
        Some("json") => read_map_json(path),
        other => Err(Error::Domain(format!(
            "unsupported map extension {:?} (use .csv or .json)",
            other.unwrap_or("")
        ))),
    }
}

/// Write a map, picking the format from the file extension.
pub fn write_map(path: impl AsRef<Path>, map: &MeshMap) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_map_csv(path, map),
        Some("json") => write_map_json(path, map),
        other => Err(Error::Domain(format!(
            "unsupported map extension {:?} (use .csv or .json)",
            other.unwrap_or("")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::mesh::build_disc_mesh;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn scratch(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("fatdisc-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(format!("{}-{name}", std::process::id()))
    }

    fn random_map(resolution: u32, seed: u64) -> MeshMap {
        let mesh = Arc::new(build_disc_mesh(resolution).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = mesh
            .nodes
            .iter()
            .map(|_| Point6::from_fn(|_, _| rng.gen_range(-2.0..2.0)))
            .collect();
        MeshMap::new(mesh, values).unwrap()
    }

    #[test]
    fn csv_roundtrip_is_bitwise() {
        let map = random_map(4, 3);
        let path = scratch("roundtrip.csv");
        write_map(&path, &map).unwrap();
        let back = read_map(&path).unwrap();
        assert_eq!(back.mesh.resolution, 4);
        assert_eq!(back.values, map.values);
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn json_roundtrip_is_bitwise() {
        let map = random_map(3, 7);
        let path = scratch("roundtrip.json");
        write_map(&path, &map).unwrap();
        let back = read_map(&path).unwrap();
        assert_eq!(back.mesh.resolution, 3);
        assert_eq!(back.values, map.values);
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn writes_leave_no_temporary_behind() {
        let map = random_map(2, 1);
        let path = scratch("clean.json");
        write_map(&path, &map).unwrap();
        let tmp = path.with_extension("json.tmp");
        assert!(path.exists());
        assert!(!tmp.exists());
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn corrupt_csv_row_reports_its_line() {
        let map = random_map(2, 5);
        let path = scratch("corrupt.csv");
        write_map(&path, &map).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text = text.replace("\n3,", "\n3,oops,");
        fs::write(&path, text).unwrap();
        let err = read_map(&path).err().unwrap();
        match err {
            Error::Parse { at, .. } => assert!(at.contains(":5"), "at = {at}"),
            other => panic!("expected a parse error, got {other}"),
        }
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn node_count_must_match_a_ring_mesh() {
        let path = scratch("short.csv");
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for v in 0..5 {
            text.push_str(&format!("{v},0,0,0,0,0,0,0,0\n"));
        }
        fs::write(&path, text).unwrap();
        assert!(matches!(read_map(&path), Err(Error::Parse { .. })));
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn tampered_positions_are_rejected() {
        let map = random_map(2, 9);
        let path = scratch("tampered.json");
        write_map(&path, &map).unwrap();
        let mut file: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        file["nodes"][1][0] = serde_json::json!(0.9);
        fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(matches!(read_map(&path), Err(Error::Parse { .. })));
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn unknown_extension_is_rejected() {
        assert!(matches!(
            read_map("map.toml"),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn resolution_inference_matches_node_counts() {
        for r in 1..40u32 {
            let n = 1 + 3 * (r as usize) * (r as usize + 1);
            assert_eq!(resolution_for_nodes(n), Some(r));
            assert_eq!(resolution_for_nodes(n + 1), None);
        }
    }
}
