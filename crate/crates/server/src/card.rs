//! Detail view of one worker.

use presence_core::{
    Overlay, PresenceCategory, PresenceState, Protocol, StatusMessage, UserProfile,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImChannel {
    pub protocol: Protocol,
    pub handle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusinessCard {
    pub user_id: String,
    pub display_name: String,
    pub photo_ref: String,
    pub email: String,
    pub state: PresenceState,
    pub presence: String,
    pub status: Option<StatusMessage>,
    /// Only the channels the worker has registered a handle for.
    pub im_channels: Vec<ImChannel>,
    pub location: Option<String>,
}

impl BusinessCard {
    pub fn new(profile: &UserProfile, state: &PresenceState, status: Option<&StatusMessage>) -> Self {
        BusinessCard {
            user_id: profile.user_id.clone(),
            display_name: profile.display_name.clone(),
            photo_ref: profile.photo_ref.clone(),
            email: profile.email.clone(),
            state: state.clone(),
            presence: presence_sentence(&profile.display_name, state),
            status: status.cloned(),
            im_channels: profile
                .im_handles
                .iter()
                .filter(|(_, handle)| !handle.trim().is_empty())
                .map(|(protocol, handle)| ImChannel { protocol: *protocol, handle: handle.clone() })
                .collect(),
            location: state.location_label.clone(),
        }
    }
}

pub fn presence_sentence(name: &str, state: &PresenceState) -> String {
    let base = match state.category {
        PresenceCategory::OfficeWithVisitor => format!("{name} is in their office with a visitor"),
        PresenceCategory::Office => format!("{name} is in their office"),
        PresenceCategory::Building => format!("{name} is in the building"),
        PresenceCategory::RemoteActive => format!("{name} is working remotely and active"),
        PresenceCategory::RemoteIdle => format!("{name} is connected remotely but idle"),
        PresenceCategory::OnlineOnly => format!("{name} is online"),
        PresenceCategory::OutOfOffice => format!("{name} is out of the office"),
        PresenceCategory::Unknown => format!("No current information about {name}"),
    };
    let mut sentence = base;
    if let Some(location) = &state.location_label {
        sentence.push_str(&format!(", last seen near {location}"));
    }
    if state.overlays.contains(&Overlay::CalendarIcon) {
        sentence.push_str(" (in a meeting)");
    }
    sentence.push('.');
    sentence
}
