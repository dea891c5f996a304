// museService.js
// Helper functions available to the generated tool. The host provides this
// object; every call is routed through the host. Do not call any other
// network API (no fetch, XMLHttpRequest, WebSocket, or external scripts).
export const museService = {
  // Returns [{id, name, description}] for the entities attached to this tool.
  async getExperts() {},
  // Returns a text response written from the perspective of one entity.
  async promptExpert(expertId, prompt) {},
  // Same as promptExpert.
  async promptEntity(expertId, prompt) {},
  // Returns a general text response that does not need an entity perspective.
  async promptGeneral(prompt) {},
};
