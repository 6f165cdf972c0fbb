/**
 * UI strings. English is the default; the Portuguese strings mirror the
 * production desk this console is modeled on. The patient-facing verification
 * banner is a fixed product string and must be rendered verbatim.
 */

export type LocaleId = "en" | "pt-BR";

export interface Strings {
  queueTitle: string;
  validatePrefix: string;
  emptyQueue: string;
  offlineBanner: string;
  retryHint: (seconds: number) => string;
  statsTitle: string;
  pendingLabel: string;
  actionedLabel: string;
  approvedLabel: string;
  correctedLabel: string;
  rejectedLabel: string;
  approveButton: string;
  correctButton: string;
  rejectButton: string;
  correctionLabel: string;
  rejectReasonLabel: string;
  reviewerLabel: string;
  decisionInFlight: string;
  alreadyDecided: string;
  correctionUnedited: string;
  rejectReasonRequired: string;
  reviewerRequired: string;
  provenanceTitle: string;
  provenanceAgent: string;
  provenanceVersion: string;
  provenanceModel: string;
  provenanceEval: string;
  provenanceEvalMissing: string;
  provenanceMissing: string;
  patientPreviewTitle: string;
  decidedHeadline: (outcome: string) => string;
  auditSeqLabel: string;
  contextTitle: string;
  aiOutputTitle: string;
  diffTitle: string;
  verificationBanner: string;
}

export const EN: Strings = {
  queueTitle: "Tasks",
  validatePrefix: "Validate",
  emptyQueue: "No pending validation tasks.",
  offlineBanner: "Cannot reach the workflow service.",
  retryHint: (seconds) => `Retrying in ${seconds}s`,
  statsTitle: "Review throughput",
  pendingLabel: "pending",
  actionedLabel: "actioned",
  approvedLabel: "approved",
  correctedLabel: "corrected",
  rejectedLabel: "rejected",
  approveButton: "Approve",
  correctButton: "Save correction",
  rejectButton: "Reject",
  correctionLabel: "Corrected answer",
  rejectReasonLabel: "Reject reason",
  reviewerLabel: "Reviewer id",
  decisionInFlight: "Submitting decision...",
  alreadyDecided: "Already decided by another reviewer.",
  correctionUnedited: "The corrected text must differ from the AI draft.",
  rejectReasonRequired: "A reject reason is required.",
  reviewerRequired: "A reviewer id is required.",
  provenanceTitle: "Provenance",
  provenanceAgent: "Agent",
  provenanceVersion: "Manifest version",
  provenanceModel: "Model",
  provenanceEval: "Offline eval score",
  provenanceEvalMissing: "not evaluated yet",
  provenanceMissing:
    "Provenance is incomplete: this output cannot be attributed to a specific "
    + "agent version, so decisions are disabled.",
  patientPreviewTitle: "Patient conversation preview",
  decidedHeadline: (outcome) => `Decision recorded: ${outcome}`,
  auditSeqLabel: "audit seq",
  contextTitle: "Encounter context",
  aiOutputTitle: "AI draft",
  diffTitle: "Your edit",
  verificationBanner:
    "Our medical team has verified that the answer given to your question "
    + "is correct!",
};

export const PT_BR: Strings = {
  queueTitle: "Tarefas",
  validatePrefix: "Validar",
  emptyQueue: "Nenhuma tarefa de validação pendente.",
  offlineBanner: "Não foi possível conectar ao serviço.",
  retryHint: (seconds) => `Nova tentativa em ${seconds}s`,
  statsTitle: "Fluxo de revisão",
  pendingLabel: "pendentes",
  actionedLabel: "revisadas",
  approvedLabel: "aprovadas",
  correctedLabel: "corrigidas",
  rejectedLabel: "rejeitadas",
  approveButton: "Aprovar",
  correctButton: "Salvar correção",
  rejectButton: "Rejeitar",
  correctionLabel: "Resposta corrigida",
  rejectReasonLabel: "Motivo da rejeição",
  reviewerLabel: "Identificação do revisor",
  decisionInFlight: "Enviando decisão...",
  alreadyDecided: "Já decidida por outro revisor.",
  correctionUnedited: "O texto corrigido deve ser diferente do rascunho da IA.",
  rejectReasonRequired: "O motivo da rejeição é obrigatório.",
  reviewerRequired: "A identificação do revisor é obrigatória.",
  provenanceTitle: "Proveniência",
  provenanceAgent: "Agente",
  provenanceVersion: "Versão do manifesto",
  provenanceModel: "Modelo",
  provenanceEval: "Pontuação de avaliação",
  provenanceEvalMissing: "ainda não avaliado",
  provenanceMissing:
    "Proveniência incompleta: esta resposta não pode ser atribuída a uma "
    + "versão específica do agente, então as decisões estão desabilitadas.",
  patientPreviewTitle: "Prévia da conversa do paciente",
  decidedHeadline: (outcome) => `Decisão registrada: ${outcome}`,
  auditSeqLabel: "registro de auditoria",
  contextTitle: "Contexto do atendimento",
  aiOutputTitle: "Rascunho da IA",
  diffTitle: "Sua edição",
  verificationBanner:
    "Nossa equipe médica verificou que a resposta dada à sua pergunta "
    + "está correta!",
};

export function strings(locale: LocaleId): Strings {
  return locale === "pt-BR" ? PT_BR : EN;
}
