//! Shared vocabulary: identifiers, money, simulated days, product
//! descriptors, business models and the service-case state machine.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                Self(id.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(id: String) -> Self {
                Self(id)
            }
        }
    };
}

string_id!(
    /// Physical product identity (serial number or similar).
    ProductId
);
string_id!(TwinId);
string_id!(
    /// A ProductAdministrator or ServiceProvider.
    StakeholderId
);
string_id!(RequestId);
string_id!(OfferId);
string_id!(CaseId);
string_id!(ToolId);

/// Amount of money in euro cents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: u64) -> Self {
        Self(cents)
    }

    pub const fn from_euros(euros: u64) -> Self {
        Self(euros * 100)
    }

    pub const fn cents(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, other: Money) -> Option<Money> {
        self.0.checked_add(other.0).map(Money)
    }

    /// Signed difference `self - other` in cents.
    pub fn signed_sub(self, other: Money) -> i64 {
        self.0 as i64 - other.0 as i64
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02} EUR", self.0 / 100, self.0 % 100)
    }
}

/// A point on the simulated day clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimDay(u32);

impl SimDay {
    pub const ZERO: SimDay = SimDay(0);

    pub const fn new(day: u32) -> Self {
        Self(day)
    }

    pub const fn get(self) -> u32 {
        self.0
    }

    pub fn plus(self, days: u32) -> SimDay {
        SimDay(self.0.saturating_add(days))
    }

    /// Whole days from `earlier` to `self`; `None` if `earlier` is later.
    pub fn days_since(self, earlier: SimDay) -> Option<u32> {
        self.0.checked_sub(earlier.0)
    }
}

impl fmt::Display for SimDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "day {}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProductKind {
    Item,
    Assembly,
    Part,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductDescriptor {
    pub product_id: ProductId,
    pub kind: ProductKind,
    pub model_id: String,
    pub manufacturer: String,
    #[serde(default)]
    pub parent: Option<ProductId>,
    #[serde(default)]
    pub connectivity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("product id must not be empty")]
    EmptyProductId,
    #[error("model_id must not be empty")]
    EmptyModelId,
    #[error("manufacturer must not be empty")]
    EmptyManufacturer,
    #[error("an Item cannot have a parent")]
    ItemWithParent,
    #[error("product cannot be its own parent")]
    SelfParent,
    #[error("a {child:?} cannot be contained in a {parent:?}")]
    InvalidParentKind { child: ProductKind, parent: ProductKind },
}

impl ProductDescriptor {
    /// Checks the descriptor on its own, without resolving the parent.
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if self.product_id.as_str().trim().is_empty() {
            return Err(DescriptorError::EmptyProductId);
        }
        if self.model_id.trim().is_empty() {
            return Err(DescriptorError::EmptyModelId);
        }
        if self.manufacturer.trim().is_empty() {
            return Err(DescriptorError::EmptyManufacturer);
        }
        match (&self.kind, &self.parent) {
            (ProductKind::Item, Some(_)) => Err(DescriptorError::ItemWithParent),
            (_, Some(parent)) if *parent == self.product_id => Err(DescriptorError::SelfParent),
            _ => Ok(()),
        }
    }

    /// Checks that `parent_kind` may contain a product of this kind.
    pub fn validate_parent_kind(&self, parent_kind: ProductKind) -> Result<(), DescriptorError> {
        let allowed = match self.kind {
            ProductKind::Item => false,
            ProductKind::Assembly => parent_kind == ProductKind::Item,
            ProductKind::Part => matches!(parent_kind, ProductKind::Item | ProductKind::Assembly),
        };
        if allowed {
            Ok(())
        } else {
            Err(DescriptorError::InvalidParentKind { child: self.kind, parent: parent_kind })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BusinessModel {
    /// Product is sent in, assessed and repaired, then returned.
    SendInRepair,
    /// Flat fee per service; the provider carries the per-unit cost risk.
    FixedPrice,
    /// A refurbished replacement ships before the original is returned.
    Exchange,
}

impl BusinessModel {
    pub const ALL: [BusinessModel; 3] =
        [BusinessModel::SendInRepair, BusinessModel::FixedPrice, BusinessModel::Exchange];
}

/// Fulfillment sub-states. The first four belong to the send-in and
/// fixed-price models, the rest to the exchange model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FulfillmentStage {
    ProductShipped,
    ProductReceived,
    Repairing,
    Returned,
    ReplacementShipped,
    ReplacementReceived,
    OriginalShipped,
    OriginalReceived,
    OriginalAssessed,
    OriginalRepaired,
    Stored,
}

impl FulfillmentStage {
    pub const ALL: [FulfillmentStage; 11] = [
        FulfillmentStage::ProductShipped,
        FulfillmentStage::ProductReceived,
        FulfillmentStage::Repairing,
        FulfillmentStage::Returned,
        FulfillmentStage::ReplacementShipped,
        FulfillmentStage::ReplacementReceived,
        FulfillmentStage::OriginalShipped,
        FulfillmentStage::OriginalReceived,
        FulfillmentStage::OriginalAssessed,
        FulfillmentStage::OriginalRepaired,
        FulfillmentStage::Stored,
    ];

    pub fn belongs_to(self, model: BusinessModel) -> bool {
        use FulfillmentStage::*;
        let exchange = matches!(
            self,
            ReplacementShipped
                | ReplacementReceived
                | OriginalShipped
                | OriginalReceived
                | OriginalAssessed
                | OriginalRepaired
                | Stored
        );
        exchange == (model == BusinessModel::Exchange)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseState {
    Draft,
    Assessed,
    Requested,
    OfferCollection,
    Decided,
    NoFeasibleOffer,
    Fulfillment(FulfillmentStage),
    Closed,
    Cancelled,
}

impl CaseState {
    pub fn all() -> Vec<CaseState> {
        use CaseState::*;
        let mut states = vec![Draft, Assessed, Requested, OfferCollection, Decided, NoFeasibleOffer];
        states.extend(FulfillmentStage::ALL.into_iter().map(Fulfillment));
        states.extend([Closed, Cancelled]);
        states
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, CaseState::Closed | CaseState::Cancelled)
    }

    /// Open for offers on the request board.
    pub fn is_open(self) -> bool {
        matches!(self, CaseState::Requested | CaseState::OfferCollection)
    }
}

impl fmt::Display for CaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseState::Fulfillment(stage) => write!(f, "Fulfillment({stage:?})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseEvent {
    AssessmentDone,
    RequestPosted,
    OfferReceived,
    OfferAccepted,
    Timeout,
    Shipped,
    Received,
    RepairDone,
    Returned,
    Stored,
    Close,
    Cancel,
}

impl CaseEvent {
    pub const ALL: [CaseEvent; 12] = [
        CaseEvent::AssessmentDone,
        CaseEvent::RequestPosted,
        CaseEvent::OfferReceived,
        CaseEvent::OfferAccepted,
        CaseEvent::Timeout,
        CaseEvent::Shipped,
        CaseEvent::Received,
        CaseEvent::RepairDone,
        CaseEvent::Returned,
        CaseEvent::Stored,
        CaseEvent::Close,
        CaseEvent::Cancel,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaseError {
    #[error("event {event:?} is not permitted in state {state}")]
    IllegalTransition { state: CaseState, event: CaseEvent },
    #[error("state {state} is not defined for the {model:?} model")]
    ModelMismatch { state: CaseState, model: BusinessModel },
}

/// Successor of `current` under `event` for a case fulfilled under `model`.
///
/// States before `Decided` do not depend on the model.
pub fn advance_case(current: CaseState, event: CaseEvent, model: BusinessModel) -> Result<CaseState, CaseError> {
    use BusinessModel as M;
    use CaseEvent as E;
    use CaseState as S;
    use FulfillmentStage as F;

    if let S::Fulfillment(stage) = current {
        if !stage.belongs_to(model) {
            return Err(CaseError::ModelMismatch { state: current, model });
        }
    }

    let next = match (current, event) {
        (S::Closed | S::Cancelled, _) => None,
        (_, E::Cancel) => Some(S::Cancelled),

        (S::Draft, E::AssessmentDone) => Some(S::Assessed),
        (S::Assessed, E::RequestPosted) => Some(S::Requested),
        (S::Requested | S::OfferCollection, E::OfferReceived) => Some(S::OfferCollection),
        (S::OfferCollection, E::OfferAccepted) => Some(S::Decided),
        (S::Requested | S::OfferCollection, E::Timeout) => Some(S::NoFeasibleOffer),
        (S::NoFeasibleOffer, E::Close) => Some(S::Closed),

        (S::Decided, E::Shipped) => Some(S::Fulfillment(match model {
            M::Exchange => F::ReplacementShipped,
            M::SendInRepair | M::FixedPrice => F::ProductShipped,
        })),

        (S::Fulfillment(stage), event) => match (stage, event) {
            (F::ProductShipped, E::Received) => Some(F::ProductReceived),
            (F::ProductReceived, E::AssessmentDone) => Some(F::Repairing),
            (F::Repairing, E::Returned) => Some(F::Returned),
            (F::Returned, E::Close) => return Ok(S::Closed),

            (F::ReplacementShipped, E::Received) => Some(F::ReplacementReceived),
            (F::ReplacementReceived, E::Shipped) => Some(F::OriginalShipped),
            (F::OriginalShipped, E::Received) => Some(F::OriginalReceived),
            (F::OriginalReceived, E::AssessmentDone) => Some(F::OriginalAssessed),
            (F::OriginalAssessed, E::RepairDone) => Some(F::OriginalRepaired),
            (F::OriginalRepaired, E::Stored) => Some(F::Stored),
            (F::Stored, E::Close) => return Ok(S::Closed),
            _ => None,
        }
        .map(S::Fulfillment),

        _ => None,
    };

    next.ok_or(CaseError::IllegalTransition { state: current, event })
}

/// True when the administrator can use the product's function again after
/// entering `state`.
pub fn reinstates_functionality(state: CaseState, model: BusinessModel) -> bool {
    match model {
        BusinessModel::Exchange => state == CaseState::Fulfillment(FulfillmentStage::ReplacementReceived),
        BusinessModel::SendInRepair | BusinessModel::FixedPrice => {
            state == CaseState::Fulfillment(FulfillmentStage::Returned)
        }
    }
}

/// Which physical unit of a case is being asked about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    /// The administrator's product the request was opened for.
    Original,
    /// The provider's refurbished unit in an exchange.
    Replacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Holder {
    Administrator,
    Provider,
    InTransit,
}

/// Physical custody of a unit while a case is active. Terminal states
/// return `None`; custody then follows the twin binding.
pub fn custody(state: CaseState, model: BusinessModel, unit: Unit) -> Option<Holder> {
    use FulfillmentStage as F;
    let stage = match state {
        CaseState::Closed | CaseState::Cancelled => return None,
        CaseState::Fulfillment(stage) => stage,
        _ => {
            return Some(match unit {
                Unit::Original => Holder::Administrator,
                Unit::Replacement => Holder::Provider,
            })
        }
    };
    let holder = match (unit, model == BusinessModel::Exchange) {
        (Unit::Original, false) => match stage {
            F::ProductShipped => Holder::InTransit,
            F::ProductReceived | F::Repairing => Holder::Provider,
            _ => Holder::Administrator,
        },
        (Unit::Original, true) => match stage {
            F::ReplacementShipped | F::ReplacementReceived => Holder::Administrator,
            F::OriginalShipped => Holder::InTransit,
            _ => Holder::Provider,
        },
        (Unit::Replacement, true) => match stage {
            F::ReplacementShipped => Holder::InTransit,
            _ => Holder::Administrator,
        },
        (Unit::Replacement, false) => return None,
    };
    Some(holder)
}
