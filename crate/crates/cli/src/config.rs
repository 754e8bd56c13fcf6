//! Run configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use nitride_rts::materials::BinaryTable;
use nitride_rts::observables::{OscillatorForm, ScanSettings};
use nitride_rts::poisson::ChargeModel;
use nitride_rts::polarization::Substrate;
use nitride_rts::potential::FieldConstruction;
use nitride_rts::scf::{SCFConfig, Setup};
use nitride_rts::structure::{cascade_stack, Layer, LayerStack, DESIGN_D, WELL_BUDGET};

pub const MATERIALS_ENV: &str = "NITRIDE_RTS_MATERIALS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// K
    pub temperature: f64,
    /// Material table replacing the built-in one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub materials: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub structure: StructureConfig,
    pub charge: ChargeModel,
    pub scf: SCFConfig,
    pub scan: ScanConfig,
    pub oscillator_form: OscillatorForm,
    /// Entries merged over the material table, e.g. `[material_overrides.gan]`.
    #[serde(skip_serializing_if = "toml::Table::is_empty")]
    pub material_overrides: toml::Table,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            temperature: 300.0,
            materials: None,
            output_dir: PathBuf::from("out"),
            structure: StructureConfig::default(),
            charge: ChargeModel::default(),
            scf: SCFConfig::default(),
            scan: ScanConfig::default(),
            oscillator_form: OscillatorForm::default(),
            material_overrides: toml::Table::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureConfig {
    /// Input-well width of the three-well cascade (nm); ignored when `layers` is given.
    pub d: f64,
    /// Explicit layer list replacing the cascade.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<Layer>>,
    /// Al fraction of both cladding media.
    pub cladding_x: f64,
    pub substrate: Substrate,
    pub field_construction: FieldConstruction,
    /// Per-layer polarization (C/m^2) replacing the computed values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarization_overrides: Option<Vec<f64>>,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig {
            d: DESIGN_D,
            layers: None,
            cladding_x: 1.0,
            substrate: Substrate::default(),
            field_construction: FieldConstruction::default(),
            polarization_overrides: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { d_min: 0.0, d_max: WELL_BUDGET, d_step: 0.01 }
    }
}

impl RunConfig {
    /// Parses a config; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        if let Some(m) = &cfg.materials {
            cfg.materials = Some(base.join(m));
        }
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            bail!("field `temperature`: {} K is not a valid temperature", self.temperature);
        }
        if let Some(m) = &self.materials {
            if !m.is_file() {
                bail!("field `materials`: file {} does not exist", m.display());
            }
        }
        if !(0.0..=WELL_BUDGET).contains(&self.structure.d) {
            bail!("field `structure.d`: {} nm outside [0, {WELL_BUDGET}]", self.structure.d);
        }
        if !(0.0..=1.0).contains(&self.structure.cladding_x) {
            bail!("field `structure.cladding_x`: {} outside [0, 1]", self.structure.cladding_x);
        }
        self.scf.validate().context("in table `scf`")?;
        self.charge.validate().context("in table `charge`")?;
        Ok(())
    }

    /// Built-in table, replaced by the configured file and then patched
    /// with `material_overrides`.
    pub fn material_table(&self) -> Result<BinaryTable> {
        let mut base: toml::Table = match &self.materials {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("field `materials`: cannot read {}", p.display()))?;
                text.parse().with_context(|| format!("material table {}", p.display()))?
            }
            None => toml::Table::try_from(BinaryTable::default())?,
        };
        merge(&mut base, &self.material_overrides);
        let text = toml::to_string(&base)?;
        BinaryTable::from_toml_str(&text).context("material table after `material_overrides`")
    }

    pub fn stack(&self, table: &BinaryTable) -> Result<LayerStack> {
        Ok(match &self.structure.layers {
            Some(layers) => LayerStack::new(layers.clone(), self.structure.cladding_x, table)?,
            None => cascade_stack(self.structure.d, table)?,
        })
    }

    pub fn setup(&self, table: &BinaryTable) -> Result<Setup> {
        let mut s = Setup::new(self.stack(table)?, table.clone(), self.temperature);
        s.substrate = self.structure.substrate;
        s.construction = self.structure.field_construction;
        s.polarization_overrides = self.structure.polarization_overrides.clone();
        if let Some(p) = &s.polarization_overrides {
            if p.len() != s.stack.len() {
                bail!(
                    "field `structure.polarization_overrides`: {} values for {} layers",
                    p.len(),
                    s.stack.len()
                );
            }
        }
        Ok(s)
    }

    pub fn scan_settings(&self, table: &BinaryTable) -> Result<ScanSettings> {
        if self.structure.layers.is_some() {
            bail!("field `structure.layers`: a scan moves the cascade's inner block and needs the default structure");
        }
        let mut s = ScanSettings::new(table.clone(), self.temperature, self.charge.clone(), self.scf.clone());
        s.form = self.oscillator_form;
        s.substrate = self.structure.substrate;
        s.construction = self.structure.field_construction;
        s.polarization_overrides = self.structure.polarization_overrides.clone();
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn merge(base: &mut toml::Table, patch: &toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let c = RunConfig::parse("", Path::new("")).unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_field_is_named() {
        let e = RunConfig::parse("[scf]\nmixng = 0.3\n", Path::new("")).unwrap_err();
        assert!(format!("{e:#}").contains("mixng"), "{e:#}");
    }

    #[test]
    fn bad_value_is_named() {
        let c = RunConfig::parse("[scf]\nmixing = 2.0\n", Path::new("")).unwrap();
        let e = c.validate().unwrap_err();
        assert!(format!("{e:#}").contains("mixing"), "{e:#}");
        let e = RunConfig::parse("temperature = \"hot\"\n", Path::new("")).unwrap_err();
        assert!(format!("{e:#}").contains("temperature"), "{e:#}");
    }

    #[test]
    fn overrides_patch_the_table() {
        let c = RunConfig::parse("[material_overrides.gan]\neffective_mass = 0.22\n", Path::new("")).unwrap();
        let t = c.material_table().unwrap();
        assert_eq!(t.gan.effective_mass, 0.22);
        assert_eq!(t.aln, BinaryTable::default().aln);
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = RunConfig::default();
        c.structure.polarization_overrides = Some(vec![0.1; 7]);
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
