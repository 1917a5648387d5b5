//! Border hue, saturation and icon set for a presence state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{Overlay, PresenceCategory, PresenceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hue {
    Green,
    Blue,
    Purple,
    Amber,
    Gray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    Full,
    Light,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Icon {
    Silhouette,
    Calendar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub hue: Hue,
    pub intensity: Intensity,
    pub icons: BTreeSet<Icon>,
}

/// RemoteIdle and OnlineOnly deliberately share light blue; the business
/// card text tells them apart.
pub fn render_style(state: &PresenceState) -> RenderStyle {
    use PresenceCategory::*;
    let (hue, intensity) = match state.category {
        OfficeWithVisitor => (Hue::Purple, Intensity::Full),
        Office => (Hue::Green, Intensity::Full),
        Building => (Hue::Green, Intensity::Light),
        RemoteActive => (Hue::Blue, Intensity::Full),
        RemoteIdle | OnlineOnly => (Hue::Blue, Intensity::Light),
        OutOfOffice => (Hue::Amber, Intensity::Full),
        Unknown => (Hue::Gray, Intensity::Light),
    };
    let mut icons = BTreeSet::new();
    if state.category == OfficeWithVisitor {
        icons.insert(Icon::Silhouette);
    }
    if state.overlays.contains(&Overlay::CalendarIcon) {
        icons.insert(Icon::Calendar);
    }
    RenderStyle { hue, intensity, icons }
}
