use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AdministratorConfig, ProviderConfig};
use crate::domain::{ProductDescriptor, ProductId, SimDay, StakeholderId, ToolId};
use crate::runtime::{ActionGate, ActorAction};
use crate::tooling::{Damage, ToolProfile, TrueState};
use crate::twin::{DamageTaxonomy, Measurement, DEFAULT_DAMAGE_CODES};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Administrator,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stakeholder {
    pub id: StakeholderId,
    pub role: Role,
    #[serde(default)]
    pub name: Option<String>,
}

/// A physical product and the stakeholder its twin is first bound to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductEntry {
    #[serde(flatten)]
    pub descriptor: ProductDescriptor,
    pub administrator: StakeholderId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueStateEntry {
    pub product_id: ProductId,
    #[serde(default)]
    pub damages: Vec<Damage>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSection {
    #[serde(default)]
    pub administrators: Vec<AdministratorConfig>,
    #[serde(default)]
    pub providers: Vec<ProviderConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShippingRoute {
    pub from: StakeholderId,
    pub to: StakeholderId,
    pub days: u32,
}

/// Human latency: `actor` does not perform `action` before `day`.
/// Without `product` the delay applies to every product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delay {
    pub day: SimDay,
    pub actor: StakeholderId,
    pub action: ActorAction,
    #[serde(default)]
    pub product: Option<ProductId>,
    /// Free-text explanation, kept for the reader of the scenario file.
    #[serde(default)]
    pub note: Option<String>,
}

/// Something a stakeholder does on a given day on their own initiative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TriggerAction {
    Assess { tool: ToolId, product: ProductId },
    Telemetry { product: ProductId, readings: Vec<Measurement> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub day: SimDay,
    pub actor: StakeholderId,
    #[serde(flatten)]
    pub action: TriggerAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub horizon: u32,
    #[serde(default)]
    pub seed: u64,
    /// Replaces the default damage taxonomy when present.
    #[serde(default)]
    pub damage_codes: Option<Vec<String>>,
    #[serde(default)]
    pub stakeholders: Vec<Stakeholder>,
    #[serde(default)]
    pub products: Vec<ProductEntry>,
    #[serde(default)]
    pub true_states: Vec<TrueStateEntry>,
    #[serde(default)]
    pub tools: Vec<ToolProfile>,
    #[serde(default)]
    pub agents: AgentSection,
    #[serde(default)]
    pub shipping: Vec<ShippingRoute>,
    #[serde(default)]
    pub delays: Vec<Delay>,
    #[serde(default)]
    pub triggers: Vec<Trigger>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| SimError::ScenarioInvalid(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SimError::ScenarioInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios always serialize")
    }

    pub fn taxonomy(&self) -> DamageTaxonomy {
        match &self.damage_codes {
            Some(codes) => DamageTaxonomy::new(codes.iter().cloned()),
            None => DamageTaxonomy::new(DEFAULT_DAMAGE_CODES),
        }
    }

    pub fn role_of(&self, id: &StakeholderId) -> Option<Role> {
        self.stakeholders.iter().find(|s| &s.id == id).map(|s| s.role)
    }

    pub fn tool(&self, id: &ToolId) -> Option<&ToolProfile> {
        self.tools.iter().find(|t| &t.tool_id == id)
    }

    pub fn true_state(&self, product: &ProductId) -> TrueState {
        let damages = self
            .true_states
            .iter()
            .find(|t| &t.product_id == product)
            .map(|t| t.damages.iter().cloned().collect())
            .unwrap_or_default();
        TrueState { product_id: product.clone(), actual_damages: damages }
    }

    pub fn shipping_days(&self, from: &StakeholderId, to: &StakeholderId) -> Option<u32> {
        self.shipping.iter().find(|r| &r.from == from && &r.to == to).map(|r| r.days)
    }

    /// All referenced identifiers must resolve and values must be in range.
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::ScenarioInvalid(msg));
        if self.horizon < 1 {
            return invalid("horizon must be at least 1".into());
        }
        if let Some(codes) = &self.damage_codes {
            if codes.is_empty() {
                return invalid("damage_codes cannot be empty".into());
            }
        }
        let taxonomy = self.taxonomy();

        let mut ids = BTreeSet::new();
        for s in &self.stakeholders {
            if !ids.insert(&s.id) {
                return invalid(format!("duplicate stakeholder {}", s.id));
            }
        }
        let known = |id: &StakeholderId| ids.contains(id);

        let mut products = BTreeMap::new();
        for p in &self.products {
            p.descriptor
                .validate()
                .map_err(|e| SimError::ScenarioInvalid(format!("{}: {e}", p.descriptor.product_id)))?;
            if products.insert(&p.descriptor.product_id, p).is_some() {
                return invalid(format!("duplicate product {}", p.descriptor.product_id));
            }
            if !known(&p.administrator) {
                return invalid(format!("product {} bound to unknown {}", p.descriptor.product_id, p.administrator));
            }
        }
        for p in &self.products {
            if let Some(parent) = &p.descriptor.parent {
                let position = |id: &ProductId| self.products.iter().position(|q| &q.descriptor.product_id == id);
                match (position(parent), position(&p.descriptor.product_id)) {
                    (Some(a), Some(b)) if a < b => {}
                    _ => return invalid(format!("parent {parent} must be listed before {}", p.descriptor.product_id)),
                }
            }
        }

        for t in &self.true_states {
            if !products.contains_key(&t.product_id) {
                return invalid(format!("true state for unknown product {}", t.product_id));
            }
            for d in &t.damages {
                if !taxonomy.contains(&d.damage_code) {
                    return invalid(format!("unknown damage code {}", d.damage_code));
                }
            }
        }

        let mut tool_ids = BTreeSet::new();
        for tool in &self.tools {
            if !tool_ids.insert(&tool.tool_id) {
                return invalid(format!("duplicate tool {}", tool.tool_id));
            }
            if !known(&tool.owner) {
                return invalid(format!("tool {} owned by unknown {}", tool.tool_id, tool.owner));
            }
            tool.validate(&taxonomy).map_err(|e| SimError::ScenarioInvalid(e.to_string()))?;
        }

        for a in &self.agents.administrators {
            if self.role_of(&a.administrator_id) != Some(Role::Administrator) {
                return invalid(format!("{} is not an administrator", a.administrator_id));
            }
            a.validate().map_err(|e| SimError::ScenarioInvalid(e.to_string()))?;
        }
        for p in &self.agents.providers {
            if self.role_of(&p.provider_id) != Some(Role::Provider) {
                return invalid(format!("{} is not a provider", p.provider_id));
            }
            p.validate().map_err(|e| SimError::ScenarioInvalid(e.to_string()))?;
        }

        for r in &self.shipping {
            if !known(&r.from) || !known(&r.to) {
                return invalid(format!("shipping route {} -> {} has unknown endpoint", r.from, r.to));
            }
        }
        for d in &self.delays {
            if !known(&d.actor) {
                return invalid(format!("delay for unknown actor {}", d.actor));
            }
            if let Some(p) = &d.product {
                if !products.contains_key(p) {
                    return invalid(format!("delay for unknown product {p}"));
                }
            }
        }
        for t in &self.triggers {
            if !known(&t.actor) {
                return invalid(format!("trigger for unknown actor {}", t.actor));
            }
            match &t.action {
                TriggerAction::Assess { tool, product } => {
                    let Some(profile) = self.tool(tool) else {
                        return invalid(format!("trigger uses unknown tool {tool}"));
                    };
                    if profile.owner != t.actor {
                        return invalid(format!("{} does not own tool {tool}", t.actor));
                    }
                    if !products.contains_key(product) {
                        return invalid(format!("trigger for unknown product {product}"));
                    }
                }
                TriggerAction::Telemetry { product, .. } => {
                    if !products.contains_key(product) {
                        return invalid(format!("telemetry for unknown product {product}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Gate built from a scenario's delays for one simulated day.
pub struct DelayGate<'a> {
    pub delays: &'a [Delay],
    pub today: SimDay,
}

impl ActionGate for DelayGate<'_> {
    fn allows(&self, actor: &StakeholderId, action: ActorAction, product: &ProductId) -> bool {
        self.delays.iter().all(|d| {
            d.actor != *actor
                || d.action != action
                || d.product.as_ref().is_some_and(|p| p != product)
                || d.day <= self.today
        })
    }
}
