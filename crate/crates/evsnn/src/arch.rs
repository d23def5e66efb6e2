//! Plain-text network architecture descriptions.
//!
//! A run directory stores the model shape as `arch.txt` so evaluation and
//! prediction can rebuild the network without the caller restating flags:
//!
//! ```text
//! threshold = 1.25
//! response_tau = 5
//! refractory_tau = 5
//!
//! [branch tactile]
//! dense 156 32
//! dense 32 50
//!
//! [branch vision]
//! pool 4 4 1.1
//! dense 6200 32
//! dense 32 10
//!
//! [head]
//! dense 60 20
//! ```
//!
//! `dense IN OUT` declares a fully connected spiking layer, `pool K S G` a
//! spatial pooling layer with kernel `K`, stride `S` and gain `G`. Branch
//! sections are consumed in declaration order; inputs are supplied to
//! branches in that same order.

use std::path::Path;

use evsnn_core::{
    Branch, Geometry, Kernel, Layer, Matrix, Modality, Network, PoolLayer, SrmConfig, SrmLayer,
    POOL_KERNEL, POOL_STRIDE, TACTILE_CODE, TACTILE_HIDDEN, VISION_CODE, VISION_HIDDEN,
};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Pool { kernel: u32, stride: u32, gain: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub modality: Modality,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub threshold: f64,
    pub response_tau: f64,
    pub refractory_tau: f64,
    pub branches: Vec<BranchSpec>,
    pub head: Vec<LayerSpec>,
}

/// Threshold and time constants used by every stock model.
const DEFAULT_THRESHOLD: f64 = 1.25;
const DEFAULT_TAU: f64 = 5.0;

impl ArchSpec {
    /// Stock tactile classifier: `n -> 32 -> 50` encoder, `50 -> classes` head.
    pub fn tactile(n_inputs: usize, n_classes: usize) -> ArchSpec {
        ArchSpec {
            threshold: DEFAULT_THRESHOLD,
            response_tau: DEFAULT_TAU,
            refractory_tau: DEFAULT_TAU,
            branches: vec![BranchSpec {
                modality: Modality::Tactile,
                layers: dense_chain(&[n_inputs, TACTILE_HIDDEN, TACTILE_CODE]),
            }],
            head: dense_chain(&[TACTILE_CODE, n_classes]),
        }
    }

    /// Stock vision classifier: `pool(4,4) -> 32 -> 10` encoder over the
    /// given pixel geometry, `10 -> classes` head.
    pub fn vision(geometry: &Geometry, n_classes: usize, pool_gain: f64) -> Result<ArchSpec> {
        Ok(ArchSpec {
            threshold: DEFAULT_THRESHOLD,
            response_tau: DEFAULT_TAU,
            refractory_tau: DEFAULT_TAU,
            branches: vec![vision_branch(geometry, pool_gain)?],
            head: dense_chain(&[VISION_CODE, n_classes]),
        })
    }

    /// Stock combined classifier: both encoders, `60 -> classes` head.
    pub fn multimodal(
        n_tactile_inputs: usize,
        geometry: &Geometry,
        n_classes: usize,
        pool_gain: f64,
    ) -> Result<ArchSpec> {
        Ok(ArchSpec {
            threshold: DEFAULT_THRESHOLD,
            response_tau: DEFAULT_TAU,
            refractory_tau: DEFAULT_TAU,
            branches: vec![
                BranchSpec {
                    modality: Modality::Tactile,
                    layers: dense_chain(&[n_tactile_inputs, TACTILE_HIDDEN, TACTILE_CODE]),
                },
                vision_branch(geometry, pool_gain)?,
            ],
            head: dense_chain(&[TACTILE_CODE + VISION_CODE, n_classes]),
        })
    }

    /// Number of classes read off the last head layer (or the last layer of
    /// the single branch when the head is empty).
    pub fn n_classes(&self) -> Option<usize> {
        let last = self
            .head
            .last()
            .or_else(|| self.branches.last().and_then(|b| b.layers.last()))?;
        match last {
            LayerSpec::Dense { outputs, .. } => Some(*outputs),
            LayerSpec::Pool { .. } => None,
        }
    }

    /// Builds the network with zero weights; callers either initialize or
    /// load trained values afterwards.
    pub fn build(&self) -> Result<Network> {
        let config = SrmConfig::new(
            self.threshold,
            Kernel::response(self.response_tau)?,
            Kernel::refractory(self.refractory_tau, self.threshold)?,
        )?;
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    modality: b.modality,
                    layers: build_layers(&b.layers)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let head = build_layers(&self.head)?;
        Ok(Network::new(branches, head, config)?)
    }

    pub fn parse(path: &Path, text: &str) -> Result<ArchSpec> {
        let mut threshold = None;
        let mut response_tau = None;
        let mut refractory_tau = None;
        let mut branches: Vec<BranchSpec> = Vec::new();
        let mut head: Option<Vec<LayerSpec>> = None;
        // Points at the layer list of the section being filled.
        let mut current: Option<usize> = None; // index into branches, or usize::MAX for head

        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(section) = line.strip_prefix('[') {
                let section = section
                    .strip_suffix(']')
                    .ok_or_else(|| AppError::parse_at_line(path, line_no, "unterminated section header"))?
                    .trim();
                match section {
                    "head" => {
                        if head.is_some() {
                            return Err(AppError::parse_at_line(path, line_no, "duplicate [head] section"));
                        }
                        head = Some(Vec::new());
                        current = Some(usize::MAX);
                    }
                    other => {
                        let modality = match other {
                            "branch tactile" => Modality::Tactile,
                            "branch vision" => Modality::Vision,
                            _ => {
                                return Err(AppError::parse_at_line(
                                    path,
                                    line_no,
                                    format!("unknown section [{other}]"),
                                ))
                            }
                        };
                        branches.push(BranchSpec {
                            modality,
                            layers: Vec::new(),
                        });
                        current = Some(branches.len() - 1);
                    }
                }
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                if current.is_some() {
                    return Err(AppError::parse_at_line(
                        path,
                        line_no,
                        "key = value settings must precede the section list",
                    ));
                }
                let key = key.trim();
                let value = value.trim();
                let slot = match key {
                    "threshold" => &mut threshold,
                    "response_tau" => &mut response_tau,
                    "refractory_tau" => &mut refractory_tau,
                    _ => return Err(AppError::parse_at_line(path, line_no, format!("unknown key {key:?}"))),
                };
                let parsed: f64 = value
                    .parse()
                    .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad number {value:?}")))?;
                *slot = Some(parsed);
                continue;
            }
            // Layer line inside a section.
            let Some(section) = current else {
                return Err(AppError::parse_at_line(path, line_no, "layer line outside any section"));
            };
            let layer = parse_layer_line(path, line_no, line)?;
            if section == usize::MAX {
                head.as_mut().expect("head section was opened").push(layer);
            } else {
                branches[section].layers.push(layer);
            }
        }

        let spec = ArchSpec {
            threshold: threshold
                .ok_or_else(|| AppError::Validation(format!("{}: missing threshold", path.display())))?,
            response_tau: response_tau
                .ok_or_else(|| AppError::Validation(format!("{}: missing response_tau", path.display())))?,
            refractory_tau: refractory_tau
                .ok_or_else(|| AppError::Validation(format!("{}: missing refractory_tau", path.display())))?,
            branches,
            head: head.unwrap_or_default(),
        };
        spec.check_chain()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<ArchSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        ArchSpec::parse(path, &text)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("threshold = {}\n", self.threshold));
        out.push_str(&format!("response_tau = {}\n", self.response_tau));
        out.push_str(&format!("refractory_tau = {}\n", self.refractory_tau));
        for branch in &self.branches {
            let name = match branch.modality {
                Modality::Tactile => "tactile",
                Modality::Vision => "vision",
            };
            out.push_str(&format!("\n[branch {name}]\n"));
            for layer in &branch.layers {
                out.push_str(&layer_line(layer));
            }
        }
        out.push_str("\n[head]\n");
        for layer in &self.head {
            out.push_str(&layer_line(layer));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(|e| AppError::io(path, e))
    }

    /// Rejects dense layers whose input width contradicts the preceding
    /// dense layer. Pool outputs depend on the input geometry, so a dense
    /// layer directly after a pool is checked at forward time instead.
    fn check_chain(&self) -> Result<()> {
        let check = |layers: &[LayerSpec], what: &str| -> Result<()> {
            for pair in layers.windows(2) {
                if let (LayerSpec::Dense { outputs, .. }, LayerSpec::Dense { inputs, .. }) = (&pair[0], &pair[1]) {
                    if outputs != inputs {
                        return Err(AppError::Validation(format!(
                            "{what}: dense layer expects {inputs} inputs but the previous layer yields {outputs}"
                        )));
                    }
                }
            }
            Ok(())
        };
        for (i, b) in self.branches.iter().enumerate() {
            check(&b.layers, &format!("branch {i}"))?;
        }
        check(&self.head, "head")?;

        // When every branch ends in a dense layer the fused width is known
        // statically and the first dense head layer must match it.
        if !self.head.is_empty() && !self.branches.is_empty() {
            let mut fused = 0usize;
            let mut known = true;
            for b in &self.branches {
                match b.layers.last() {
                    Some(LayerSpec::Dense { outputs, .. }) => fused += outputs,
                    _ => known = false,
                }
            }
            if known {
                if let LayerSpec::Dense { inputs, .. } = &self.head[0] {
                    if *inputs != fused {
                        return Err(AppError::Validation(format!(
                            "head expects {inputs} inputs but the branches yield {fused} fused channels"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn dense_chain(widths: &[usize]) -> Vec<LayerSpec> {
    widths
        .windows(2)
        .map(|w| LayerSpec::Dense {
            inputs: w[0],
            outputs: w[1],
        })
        .collect()
}

fn vision_branch(geometry: &Geometry, pool_gain: f64) -> Result<BranchSpec> {
    let pool = PoolLayer::new(POOL_KERNEL, POOL_STRIDE, pool_gain)?;
    let pooled = pool.n_out(geometry);
    let mut layers = vec![LayerSpec::Pool {
        kernel: POOL_KERNEL,
        stride: POOL_STRIDE,
        gain: pool_gain,
    }];
    layers.extend(dense_chain(&[pooled, VISION_HIDDEN, VISION_CODE]));
    Ok(BranchSpec {
        modality: Modality::Vision,
        layers,
    })
}

fn build_layers(specs: &[LayerSpec]) -> Result<Vec<Layer>> {
    specs
        .iter()
        .map(|spec| match *spec {
            LayerSpec::Dense { inputs, outputs } => {
                if inputs == 0 || outputs == 0 {
                    return Err(AppError::Validation("dense layer dimensions must be positive".into()));
                }
                Ok(Layer::Dense(SrmLayer::new(Matrix::zeros(outputs, inputs))))
            }
            LayerSpec::Pool { kernel, stride, gain } => Ok(Layer::Pool(PoolLayer::new(kernel, stride, gain)?)),
        })
        .collect()
}

fn parse_layer_line(path: &Path, line_no: u64, line: &str) -> Result<LayerSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["dense", a, b] => {
            let inputs = a
                .parse()
                .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad layer width {a:?}")))?;
            let outputs = b
                .parse()
                .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad layer width {b:?}")))?;
            Ok(LayerSpec::Dense { inputs, outputs })
        }
        ["pool", k, s, g] => {
            let kernel = k
                .parse()
                .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad pool kernel {k:?}")))?;
            let stride = s
                .parse()
                .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad pool stride {s:?}")))?;
            let gain = g
                .parse()
                .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad pool gain {g:?}")))?;
            Ok(LayerSpec::Pool { kernel, stride, gain })
        }
        _ => Err(AppError::parse_at_line(
            path,
            line_no,
            format!("expected \"dense IN OUT\" or \"pool K S G\", found {line:?}"),
        )),
    }
}

fn layer_line(layer: &LayerSpec) -> String {
    match layer {
        LayerSpec::Dense { inputs, outputs } => format!("dense {inputs} {outputs}\n"),
        LayerSpec::Pool { kernel, stride, gain } => format!("pool {kernel} {stride} {gain}\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use evsnn_core::{multimodal_network, tactile_network, vision_network, DEFAULT_POOL_GAIN};
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("arch.txt")
    }

    #[test]
    fn round_trip_preserves_spec() {
        let geometry = Geometry::new(200, 250, 2).unwrap();
        let spec = ArchSpec::multimodal(156, &geometry, 20, DEFAULT_POOL_GAIN).unwrap();
        let text = spec.serialize();
        let back = ArchSpec::parse(&p(), &text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn presets_match_the_library_builders() {
        let config = SrmConfig::default_for_step();
        let geometry = Geometry::new(40, 50, 2).unwrap();

        let a = ArchSpec::tactile(156, 20).build().unwrap();
        let b = tactile_network(156, 20, config.clone()).unwrap();
        assert_eq!(a, b);

        let a = ArchSpec::vision(&geometry, 4, DEFAULT_POOL_GAIN).unwrap().build().unwrap();
        let b = vision_network(&geometry, 4, config.clone(), DEFAULT_POOL_GAIN).unwrap();
        assert_eq!(a, b);

        let a = ArchSpec::multimodal(24, &geometry, 2, DEFAULT_POOL_GAIN)
            .unwrap()
            .build()
            .unwrap();
        let b = multimodal_network(24, &geometry, 2, config, DEFAULT_POOL_GAIN).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_count_reads_off_the_head() {
        assert_eq!(ArchSpec::tactile(10, 7).n_classes(), Some(7));
    }

    #[test]
    fn mismatched_dense_chain_is_rejected() {
        let text = "threshold = 1.25\nresponse_tau = 5\nrefractory_tau = 5\n[branch tactile]\ndense 10 32\ndense 33 50\n[head]\ndense 50 2\n";
        let err = ArchSpec::parse(&p(), text).unwrap_err();
        assert_eq!(err.exit_code(), 5, "{err}");
    }

    #[test]
    fn mismatched_head_width_is_rejected() {
        let text = "threshold = 1.25\nresponse_tau = 5\nrefractory_tau = 5\n[branch tactile]\ndense 10 32\n[head]\ndense 31 2\n";
        let err = ArchSpec::parse(&p(), text).unwrap_err();
        assert!(err.to_string().contains("fused"), "{err}");
    }

    #[test]
    fn unknown_section_names_line() {
        let text = "threshold = 1\nresponse_tau = 5\nrefractory_tau = 5\n[branch sonar]\n";
        let err = ArchSpec::parse(&p(), text).unwrap_err();
        assert_eq!(err.to_string(), "arch.txt: unknown section [branch sonar] (line 4)");
    }

    #[test]
    fn missing_threshold_is_rejected() {
        let text = "response_tau = 5\nrefractory_tau = 5\n[head]\ndense 4 2\n";
        let err = ArchSpec::parse(&p(), text).unwrap_err();
        assert!(err.to_string().contains("missing threshold"), "{err}");
    }
}
