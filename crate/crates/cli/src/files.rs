//! Factor files and the `key=value` metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fastcp::io::{self, AnyTensor};
use fastcp::{DenseTensor, KruskalModel, Matrix, Scalar, ScalarKind};
use num_complex::Complex64;

/// Scalars that can be taken out of an [`AnyTensor`].
pub trait FileScalar: Scalar {
    fn take(t: AnyTensor) -> Result<DenseTensor<Self>>;
}

impl FileScalar for f64 {
    fn take(t: AnyTensor) -> Result<DenseTensor<Self>> {
        Ok(t.into_real()?)
    }
}

impl FileScalar for Complex64 {
    fn take(t: AnyTensor) -> Result<DenseTensor<Self>> {
        Ok(t.into_complex()?)
    }
}

/// `<prefix><suffix>`, keeping any dots already in the prefix.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn save_tensor<T: Scalar>(path: &Path, t: &DenseTensor<T>) -> Result<()> {
    io::save(path, t).with_context(|| format!("writing {}", path.display()))
}

pub fn load_tensor(path: &Path) -> Result<AnyTensor> {
    io::load(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes each factor as an `I_n x R` tensor at `<prefix>.<tag><n>.cptn`.
pub fn save_factors<T: Scalar>(model: &KruskalModel<T>, prefix: &Path, tag: &str) -> Result<Vec<PathBuf>> {
    let model = model.absorb_weights();
    model
        .factors()
        .iter()
        .enumerate()
        .map(|(n, f)| {
            let path = with_suffix(prefix, &format!(".{tag}{n}.cptn"));
            let t = DenseTensor::new(vec![f.nrows(), f.ncols()], f.as_slice().to_vec())?;
            save_tensor(&path, &t)?;
            Ok(path)
        })
        .collect()
}

pub fn load_factors<T: FileScalar>(paths: &[PathBuf]) -> Result<KruskalModel<T>> {
    let factors = paths
        .iter()
        .map(|p| {
            let t = T::take(load_tensor(p)?)?;
            match t.dims() {
                &[rows, cols] => Ok(Matrix::from_column_slice(rows, cols, t.data())),
                d => Err(anyhow!("{}: factor file must be 2-way, got dims {d:?}", p.display())),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KruskalModel::new(factors)?)
}

/// Contents of the sidecar written by `gen`. Paths are stored relative to the sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub nu: f64,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub kind: ScalarKind,
    pub tensor: PathBuf,
    pub noisy: Option<PathBuf>,
    pub measured_snr_db: Option<f64>,
    pub truth: Vec<PathBuf>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

impl Meta {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            ScalarKind::Real => "real",
            ScalarKind::Complex => "complex",
        };
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let _ = writeln!(s, "dims={}", join(&self.dims));
        let _ = writeln!(s, "R={}", self.rank);
        let _ = writeln!(s, "nu={}", self.nu);
        let _ = writeln!(s, "snr_db={}", opt(self.snr_db));
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "kind={kind}");
        let _ = writeln!(s, "tensor={}", file_name(&self.tensor));
        let _ = writeln!(s, "noisy={}", self.noisy.as_deref().map(file_name).unwrap_or_default());
        let _ = writeln!(s, "measured_snr_db={}", opt(self.measured_snr_db));
        let truth: Vec<String> = self.truth.iter().map(|p| file_name(p)).collect();
        let _ = writeln!(s, "truth={}", truth.join(","));
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let mut kv = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("bad metadata line '{line}'"))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| kv.get(k).cloned().ok_or_else(|| anyhow!("metadata lacks '{k}'"));
        let opt_f64 = |k: &str| -> Result<Option<f64>> {
            match kv.get(k).map(String::as_str) {
                None | Some("") => Ok(None),
                Some(v) => Ok(Some(v.parse()?)),
            }
        };
        let dims = get("dims")?.split(',').map(str::parse).collect::<Result<Vec<usize>, _>>()?;
        let kind = match get("kind")?.as_str() {
            "real" => ScalarKind::Real,
            "complex" => ScalarKind::Complex,
            other => bail!("unknown kind '{other}'"),
        };
        let noisy = get("noisy").ok().filter(|s| !s.is_empty()).map(|s| dir.join(s));
        let truth = get("truth")?.split(',').filter(|s| !s.is_empty()).map(|s| dir.join(s)).collect();
        Ok(Self {
            dims,
            rank: get("R")?.parse()?,
            nu: get("nu")?.parse()?,
            snr_db: opt_f64("snr_db")?,
            seed: get("seed")?.parse()?,
            kind,
            tensor: dir.join(get("tensor")?),
            noisy,
            measured_snr_db: opt_f64("measured_snr_db")?,
            truth,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Meta {
            dims: vec![4, 5, 6],
            rank: 2,
            nu: 0.5,
            snr_db: Some(30.0),
            seed: 7,
            kind: ScalarKind::Complex,
            tensor: dir.path().join("a.cptn"),
            noisy: Some(dir.path().join("a.noisy.cptn")),
            measured_snr_db: Some(29.97),
            truth: vec![dir.path().join("a.truth0.cptn"), dir.path().join("a.truth1.cptn")],
        };
        let path = dir.path().join("a.meta");
        m.write(&path).unwrap();
        assert_eq!(Meta::read(&path).unwrap(), m);
    }

    #[test]
    fn suffix_keeps_dots() {
        assert_eq!(with_suffix(Path::new("out/run.v1"), ".meta"), PathBuf::from("out/run.v1.meta"));
    }
}
